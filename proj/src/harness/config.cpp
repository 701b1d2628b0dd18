#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "sinkflow/harness.hpp"

namespace sinkflow::harness {

namespace {

const char* const kExperiments[] = {
    "sinkhorn_run",     "pma_run",  "fokker_planck_run", "diffusion_run",        "markov_chain_run",
    "eps_limit",        "metric_derivative", "kl_decay", "gaussian_closed_form", "laplace_estimate",
};

json default_tolerances(const std::string& e) {
    if (e == "pma_run")
        return {{"mean_rel", 0.02}, {"variance_rel", 0.02}, {"refinement_ratio", 1.8},
                {"stationary", 1e-3}};
    if (e == "fokker_planck_run") return {{"mean_rel", 0.01}, {"variance_rel", 0.01}};
    if (e == "eps_limit")
        return {{"ratio_low", 0.3}, {"ratio_high", 0.8}, {"stationary", 1e-6}};
    if (e == "sinkhorn_run")
        return {{"contraction_slack", 1e-9}, {"normalization", 1e-8}, {"y_marginal", 1e-5}};
    if (e == "laplace_estimate") return {{"slope_min", 1.7}, {"control_slope_max", 1.0}};
    if (e == "metric_derivative")
        return {{"ratio_low", 0.95}, {"ratio_high", 1.05}, {"reduction", 10.0}};
    if (e == "kl_decay") return {{"bound_factor", 1.05}, {"equality_rel", 0.01}};
    if (e == "diffusion_run") return {{"standard_errors", 3.0}, {"ks_factor", 2.0}};
    if (e == "markov_chain_run") return {{"ks_factor", 3.0}};
    if (e == "gaussian_closed_form") return {{"euclid_abs", 1e-3}, {"mirror_rel", 0.02}};
    return json::object();
}

json gaussian(double m, double v) { return {{"family", "gaussian"}, {"mean", m}, {"variance", v}}; }

void merge_defaults(json& target, const json& defaults) {
    for (auto it = defaults.begin(); it != defaults.end(); ++it) {
        if (!target.contains(it.key()))
            target[it.key()] = it.value();
        else if (it.value().is_object() && target[it.key()].is_object())
            merge_defaults(target[it.key()], it.value());
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void check_measure(const json& m, const char* name) {
    require(m.is_object(), std::string("problem.") + name + " must be an object");
    const auto fam = m.value("family", "");
    if (fam == "gaussian") {
        require(m.contains("mean") && m.contains("variance"),
                std::string("problem.") + name + " needs mean and variance");
        require(m["variance"].get<double>() > 0.0,
                std::string("problem.") + name + " variance must be positive");
    } else {
        require(fam == "same_as_nu" && std::string(name) == "rho0",
                std::string("problem.") + name + ": unsupported family '" + fam + "'");
    }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    require(doc.is_object(), "config must be a JSON object");
    ExperimentConfig c;
    c.experiment = doc.value("experiment", "");
    bool known = false;
    for (const char* e : kExperiments) known = known || c.experiment == e;
    require(known, "unknown experiment '" + c.experiment + "'");

    c.problem = doc.value("problem", json::object());
    c.numerics = doc.value("numerics", json::object());
    c.oracle = doc.value("oracle", json(nullptr));
    c.output = doc.value("output", json::object());
    require(c.problem.is_object() && c.numerics.is_object() && c.output.is_object(),
            "problem, numerics and output must be objects");

    merge_defaults(c.problem, {{"mu", gaussian(0.0, 1.0)},
                               {"nu", gaussian(0.5, 1.0)},
                               {"rho0", {{"family", "same_as_nu"}}},
                               {"u0", "brenier"}});
    merge_defaults(c.numerics, {{"L", 8.0},
                                {"n", 512},
                                {"dt", 1e-3},
                                {"eps_list", c.experiment == "laplace_estimate"
                                                 ? json{0.2, 0.1, 0.05, 0.025}
                                                 : json{0.2, 0.1, 0.05}},
                                {"T", 1.0},
                                {"checkpoints", {0.5, 1.0}},
                                {"particles", 100000},
                                {"seed", 1},
                                {"tolerances", default_tolerances(c.experiment)}});
    merge_defaults(c.output,
                   {{"directory", c.experiment}, {"snapshot_stride", 100}, {"emit_svg", true}});

    check_measure(c.problem["mu"], "mu");
    check_measure(c.problem["nu"], "nu");
    check_measure(c.problem["rho0"], "rho0");
    require(c.problem["u0"] == "brenier", "problem.u0 supports only \"brenier\"");

    const auto& nm = c.numerics;
    require(nm["n"].is_number_integer() && nm["n"].get<long long>() > 0, "numerics.n must be a positive integer");
    const auto n = nm["n"].get<std::uint64_t>();
    require(std::has_single_bit(n) && n >= 64 && n <= 2048,
            "numerics.n must be a power of two in [64, 2048]");
    require(nm["T"].get<double>() > 0.0, "numerics.T must be positive");
    require(nm["dt"].get<double>() > 0.0, "numerics.dt must be positive");
    require(nm["L"].get<double>() > 0.0, "numerics.L must be positive");
    require(nm["particles"].get<long long>() > 0, "numerics.particles must be positive");
    const auto eps = nm["eps_list"].get<std::vector<double>>();
    require(!eps.empty(), "numerics.eps_list must be nonempty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        require(eps[i] > 0.0, "numerics.eps_list entries must be positive");
        require(i == 0 || eps[i] < eps[i - 1], "numerics.eps_list must be strictly decreasing");
    }
    require(c.output["snapshot_stride"].get<long long>() > 0, "output.snapshot_stride must be positive");
    if (!c.oracle.is_null())
        require(c.oracle.is_object() && c.oracle.contains("kind"), "oracle needs a kind");
    return c;
}

json to_json(const ExperimentConfig& c) {
    return {{"experiment", c.experiment},
            {"problem", c.problem},
            {"numerics", c.numerics},
            {"oracle", c.oracle},
            {"output", c.output}};
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string file_sha256(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string config_hash(const ExperimentConfig& c) { return sha256_hex(to_json(c).dump()); }

}  // namespace sinkflow::harness
