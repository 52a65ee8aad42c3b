#include <gtest/gtest.h>

#include <hhodef/config.hpp>

#include <sstream>

using namespace hhodef;

namespace {

RunConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

} // namespace

TEST(Config, ParsesAllSections)
{
    const RunConfig cfg = parse(R"(
# comment line
[method]
method = uhho
degree = 2
grad_space = rtn   # inline comment
beta0 = 100

[newton]
rel_tol = 1e-9
load_steps = 5
stop_after_steps = 2

[case]
name = annulus
mu = 0.333
lambda = 1666.44
r0 = 1.5

[run]
levels = 3
mesh = meshes/block.msh
out = results
threads = 4
)");

    EXPECT_EQ(cfg.method.method, Method::Unstabilized);
    EXPECT_EQ(cfg.method.degree, 2);
    EXPECT_EQ(cfg.method.grad_space, GradSpace::Rtn);
    EXPECT_EQ(cfg.method.beta0, 100.0);
    EXPECT_EQ(cfg.newton.rel_tol, 1e-9);
    EXPECT_EQ(cfg.newton.load_steps, 5);
    EXPECT_EQ(cfg.newton.stop_after_steps, 2);
    EXPECT_EQ(cfg.newton.abs_tol, 1e-10); // untouched default
    EXPECT_EQ(cfg.case_name, "annulus");
    EXPECT_EQ(cfg.mu, 0.333);
    EXPECT_EQ(cfg.lambda, 1666.44);
    ASSERT_TRUE(cfg.case_params.count("r0"));
    EXPECT_EQ(cfg.case_params.at("r0"), 1.5);
    EXPECT_EQ(cfg.levels, 3);
    EXPECT_EQ(cfg.mesh_file, "meshes/block.msh");
    EXPECT_EQ(cfg.output_dir, "results");
    EXPECT_EQ(cfg.threads, 4);
}

TEST(Config, RoundTripsThroughSerialization)
{
    RunConfig cfg;
    cfg.method.method = Method::Unstabilized;
    cfg.method.degree = 2;
    cfg.method.grad_space = GradSpace::Rtn;
    cfg.method.beta0 = 42.5;
    cfg.newton.load_steps = 7;
    cfg.newton.stop_after_steps = 3;
    cfg.case_name = "block";
    cfg.mu = 1.0;
    cfg.lambda = 4999.0;
    cfg.case_params["indent_depth"] = 0.8;
    cfg.levels = 2;
    cfg.mesh_file = "meshes/block.msh";
    cfg.output_dir = "out";
    cfg.threads = 2;

    std::ostringstream out;
    serialize_config(cfg, out);
    const RunConfig back = parse(out.str());

    EXPECT_EQ(back.method.method, cfg.method.method);
    EXPECT_EQ(back.method.degree, cfg.method.degree);
    EXPECT_EQ(back.method.grad_space, cfg.method.grad_space);
    EXPECT_EQ(back.method.beta0, cfg.method.beta0);
    EXPECT_EQ(back.newton.load_steps, cfg.newton.load_steps);
    EXPECT_EQ(back.newton.stop_after_steps, cfg.newton.stop_after_steps);
    EXPECT_EQ(back.case_name, cfg.case_name);
    EXPECT_EQ(back.lambda, cfg.lambda);
    EXPECT_EQ(back.case_params, cfg.case_params);
    EXPECT_EQ(back.mesh_file, cfg.mesh_file);
    EXPECT_EQ(back.threads, cfg.threads);
}

TEST(Config, GradSpaceFollowsMethodWhenOmitted)
{
    EXPECT_EQ(parse("[method]\nmethod = shho\n").method.grad_space,
              GradSpace::Pk);
    EXPECT_EQ(parse("[method]\nmethod = uhho\n").method.grad_space,
              GradSpace::Pkp1);
}

TEST(Config, ErrorsCarryLineNumbers)
{
    try {
        parse("[method]\ndegree = 1\n\nbeta0 = oops\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos)
            << e.what();
    }

    try {
        parse("mu = 1\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("section"), std::string::npos);
    }
}

TEST(Config, RejectsMalformedInput)
{
    EXPECT_THROW(parse("[bogus]\n"), ConfigError);
    EXPECT_THROW(parse("[method\n"), ConfigError);
    EXPECT_THROW(parse("[method]\nno_such_key = 3\n"), ConfigError);
    EXPECT_THROW(parse("[method]\ndegree 1\n"), ConfigError);
    EXPECT_THROW(parse("[method]\ndegree =\n"), ConfigError);
    EXPECT_THROW(parse("[method]\ndegree = 1.5\n"), ConfigError);
    EXPECT_THROW(parse("[method]\nmethod = fem\n"), ConfigError);
    EXPECT_THROW(parse("[method]\ngrad_space = h1\n"), ConfigError);
    EXPECT_THROW(parse("[run]\nlevels = 2x\n"), ConfigError);
}

TEST(Config, ValidationRejectsInconsistentMethods)
{
    EXPECT_THROW(parse("[method]\nmethod = shho\ngrad_space = rtn\n"),
                 ConfigError);
    EXPECT_THROW(parse("[method]\nmethod = uhho\ngrad_space = pk\n"),
                 ConfigError);
    EXPECT_THROW(parse("[method]\ndegree = 0\n"), ConfigError);
    EXPECT_THROW(parse("[method]\nmethod = shho\nbeta0 = -1\n"), ConfigError);
}

TEST(Config, BulkQuadratureOrderPolicy)
{
    MethodConfig m;
    m.method = Method::Stabilized;
    m.degree = 2;
    EXPECT_EQ(m.bulk_quad_order(), 4);
    m.method = Method::Unstabilized;
    EXPECT_EQ(m.bulk_quad_order(), 6);
    m.quad_order_override = 9;
    EXPECT_EQ(m.bulk_quad_order(), 9);
}

TEST(Config, MissingFileIsAnError)
{
    EXPECT_THROW(parse_config_file("/nonexistent/path.cfg"), ConfigError);
}
