#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "basis.hpp"
#include "types.hpp"

namespace hhodef {

enum class Method { Stabilized, Unstabilized };

/// Discretization choice.  The stabilized method reconstructs the gradient
/// in P^k and penalizes the face jumps with beta = beta0 * mu; the
/// unstabilized one reconstructs in P^{k+1} or the RTN-type space and has no
/// penalty term.
struct MethodConfig {
    Method method = Method::Stabilized;
    int degree = 1;
    GradSpace grad_space = GradSpace::Pk;
    double beta0 = 1.0;
    int quad_order_override = 0; // 0 = automatic

    /* Quadrature exactness for the nonlinear volume integrands: 2k for the
     * stabilized method, 2k+2 for the unstabilized one. */
    int bulk_quad_order() const
    {
        if (quad_order_override > 0)
            return quad_order_override;
        return method == Method::Stabilized ? 2 * degree : 2 * degree + 2;
    }

    bool stabilized() const { return method == Method::Stabilized; }

    void validate() const
    {
        if (degree < 1)
            throw ConfigError("method: degree must be >= 1");
        if (method == Method::Stabilized && grad_space != GradSpace::Pk)
            throw ConfigError("method: the stabilized method requires grad_space = pk");
        if (method == Method::Unstabilized && grad_space == GradSpace::Pk)
            throw ConfigError("method: the unstabilized method requires "
                              "grad_space = pkp1 or rtn");
        if (method == Method::Stabilized && beta0 <= 0.0)
            throw ConfigError("method: beta0 must be positive");
    }
};

struct NewtonConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    int max_iterations = 20;
    int load_steps = 1;
    int step_bisection_limit = 8;
    double damping = 1.0;
    int stop_after_steps = 0; // 0 = run to full load
};

/// Everything a driver run needs.  Serializes to a flat key = value file
/// with one section per block; parsing then serializing reproduces the same
/// settings.
struct RunConfig {
    MethodConfig method;
    NewtonConfig newton;

    std::string case_name = "manufactured";
    double mu = 1.0;
    double lambda = 10.0;
    std::map<std::string, double> case_params; // extra named case parameters

    int levels = 1;
    std::string mesh_file;
    std::string output_dir = ".";
    int threads = 1;
};

inline std::string to_string(Method m)
{
    return m == Method::Stabilized ? "shho" : "uhho";
}

inline std::string to_string(GradSpace s)
{
    switch (s) {
    case GradSpace::Pk: return "pk";
    case GradSpace::Pkp1: return "pkp1";
    case GradSpace::Rtn: return "rtn";
    }
    return "?";
}

inline Method parse_method(const std::string& s)
{
    if (s == "shho")
        return Method::Stabilized;
    if (s == "uhho")
        return Method::Unstabilized;
    throw ConfigError("unknown method '" + s + "' (expected shho or uhho)");
}

inline GradSpace parse_grad_space(const std::string& s)
{
    if (s == "pk")
        return GradSpace::Pk;
    if (s == "pkp1")
        return GradSpace::Pkp1;
    if (s == "rtn")
        return GradSpace::Rtn;
    throw ConfigError("unknown grad_space '" + s + "' (expected pk, pkp1 or rtn)");
}

/* The space the method actually runs with when the user left the default in
 * place: pk for shho, pkp1 for uhho. */
inline GradSpace default_grad_space(Method m)
{
    return m == Method::Stabilized ? GradSpace::Pk : GradSpace::Pkp1;
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    if (a == std::string::npos)
        return "";
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v, int lineno)
{
    std::size_t pos;
    double x;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(lineno) +
                          ": expected a number, got '" + v + "'");
    }
    if (pos != v.size())
        throw ConfigError("line " + std::to_string(lineno) +
                          ": trailing characters after number '" + v + "'");
    return x;
}

inline int parse_int(const std::string& v, int lineno)
{
    const double x = parse_double(v, lineno);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw ConfigError("line " + std::to_string(lineno) +
                          ": expected an integer, got '" + v + "'");
    return i;
}

} // namespace detail

inline RunConfig parse_config(std::istream& in)
{
    RunConfig cfg;
    bool grad_space_given = false;
    std::string section;
    std::string line;
    int lineno = 0;

    while (std::getline(in, line)) {
        lineno++;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header '" + line + "'");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "method" && section != "newton" && section != "case" &&
                section != "run")
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": unknown section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");

        if (section == "method") {
            if (key == "method")
                cfg.method.method = parse_method(val);
            else if (key == "degree")
                cfg.method.degree = detail::parse_int(val, lineno);
            else if (key == "grad_space") {
                cfg.method.grad_space = parse_grad_space(val);
                grad_space_given = true;
            } else if (key == "beta0")
                cfg.method.beta0 = detail::parse_double(val, lineno);
            else if (key == "quad_order")
                cfg.method.quad_order_override = detail::parse_int(val, lineno);
            else
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "' in [method]");
        } else if (section == "newton") {
            if (key == "rel_tol")
                cfg.newton.rel_tol = detail::parse_double(val, lineno);
            else if (key == "abs_tol")
                cfg.newton.abs_tol = detail::parse_double(val, lineno);
            else if (key == "max_iterations")
                cfg.newton.max_iterations = detail::parse_int(val, lineno);
            else if (key == "load_steps")
                cfg.newton.load_steps = detail::parse_int(val, lineno);
            else if (key == "step_bisection_limit")
                cfg.newton.step_bisection_limit = detail::parse_int(val, lineno);
            else if (key == "damping")
                cfg.newton.damping = detail::parse_double(val, lineno);
            else if (key == "stop_after_steps")
                cfg.newton.stop_after_steps = detail::parse_int(val, lineno);
            else
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "' in [newton]");
        } else if (section == "case") {
            if (key == "name")
                cfg.case_name = val;
            else if (key == "mu")
                cfg.mu = detail::parse_double(val, lineno);
            else if (key == "lambda")
                cfg.lambda = detail::parse_double(val, lineno);
            else
                cfg.case_params[key] = detail::parse_double(val, lineno);
        } else if (section == "run") {
            if (key == "levels")
                cfg.levels = detail::parse_int(val, lineno);
            else if (key == "mesh")
                cfg.mesh_file = val;
            else if (key == "out")
                cfg.output_dir = val;
            else if (key == "threads")
                cfg.threads = detail::parse_int(val, lineno);
            else
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "' in [run]");
        } else {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": key outside of any section");
        }
    }

    if (!grad_space_given)
        cfg.method.grad_space = default_grad_space(cfg.method.method);
    cfg.method.validate();
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

inline void serialize_config(const RunConfig& cfg, std::ostream& out)
{
    out << "[method]\n";
    out << "method = " << to_string(cfg.method.method) << "\n";
    out << "degree = " << cfg.method.degree << "\n";
    out << "grad_space = " << to_string(cfg.method.grad_space) << "\n";
    out << "beta0 = " << cfg.method.beta0 << "\n";
    if (cfg.method.quad_order_override > 0)
        out << "quad_order = " << cfg.method.quad_order_override << "\n";

    out << "\n[newton]\n";
    out << "rel_tol = " << cfg.newton.rel_tol << "\n";
    out << "abs_tol = " << cfg.newton.abs_tol << "\n";
    out << "max_iterations = " << cfg.newton.max_iterations << "\n";
    out << "load_steps = " << cfg.newton.load_steps << "\n";
    out << "step_bisection_limit = " << cfg.newton.step_bisection_limit << "\n";
    out << "damping = " << cfg.newton.damping << "\n";
    if (cfg.newton.stop_after_steps > 0)
        out << "stop_after_steps = " << cfg.newton.stop_after_steps << "\n";

    out << "\n[case]\n";
    out << "name = " << cfg.case_name << "\n";
    out << "mu = " << cfg.mu << "\n";
    out << "lambda = " << cfg.lambda << "\n";
    for (const auto& [key, val] : cfg.case_params)
        out << key << " = " << val << "\n";

    out << "\n[run]\n";
    out << "levels = " << cfg.levels << "\n";
    if (!cfg.mesh_file.empty())
        out << "mesh = " << cfg.mesh_file << "\n";
    out << "out = " << cfg.output_dir << "\n";
    out << "threads = " << cfg.threads << "\n";
}

} // namespace hhodef
