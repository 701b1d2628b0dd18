#include <fstream>
#include <sstream>

#include "sinkflow/harness.hpp"
#include "sinkflow/io.hpp"

namespace sinkflow::harness {

namespace fs = std::filesystem;

namespace {

json gaussian(double m, double v) { return {{"family", "gaussian"}, {"mean", m}, {"variance", v}}; }

ExperimentConfig make(const std::string& name, const std::string& experiment, json problem, json numerics,
                      json oracle = nullptr) {
    json doc = {{"experiment", experiment},
                {"problem", std::move(problem)},
                {"numerics", std::move(numerics)},
                {"oracle", std::move(oracle)},
                {"output", {{"directory", name}}}};
    return parse_config(doc);
}

const json kLocation = {{"mu", gaussian(0.0, 1.0)}, {"nu", gaussian(0.5, 1.0)}};
const json kScale = {{"mu", gaussian(0.0, 1.0)}, {"nu", gaussian(0.0, 0.25)}};

struct Criterion {
    int id;
    const char* title;
    std::vector<std::pair<const char*, const char*>> parts;  // (run directory, verdict prefix)
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list = {
        {1, "Gaussian location oracle", {{"pma_location", "mean_rel"}, {"pma_location", "variance_rel"}}},
        {2, "Gaussian scale oracle", {{"pma_scale", ""}, {"fokker_planck_scale", ""}}},
        {3, "eps-scaling limit", {{"eps_limit", ""}}},
        {4, "Sinkhorn operator properties", {{"sinkhorn_operators", ""}}},
        {5, "Laplace estimate", {{"laplace_estimate", ""}}},
        {6, "metric derivative", {{"metric_derivative", ""}}},
        {7, "KL decay", {{"kl_decay", ""}}},
        {8, "PDE identities", {{"pma_location", "identity_"}}},
        {9, "diffusion marginals", {{"diffusion", ""}, {"markov_chain", ""}}},
        {10, "Euclidean mirror ODEs", {{"gaussian_closed_form", "euclid_"}}},
        {11, "mirror-flow examples", {{"gaussian_closed_form", "mirror_"}}},
    };
    return list;
}

std::string describe(const Verdict& v) {
    std::ostringstream os;
    os << v.name << "=" << io::real(v.value);
    if (v.comparison == "in")
        os << " in [" << v.tolerance << ", " << v.upper << "]";
    else
        os << " " << v.comparison << " " << v.tolerance;
    return os.str();
}

Report failed_report(const ExperimentConfig& c, const std::string& what) {
    Report r{c.experiment, config_hash(c), json::array(), {}};
    r.verdicts.push_back({"exception: " + what, 0.0, 0.0, "<=", false});
    return r;
}

}  // namespace

std::vector<ExperimentConfig> verify_configs() {
    const json base = {{"L", 8.0}, {"n", 512}, {"dt", 1e-3}, {"T", 1.0}, {"seed", 20240601}};
    auto with = [&](json extra) {
        json n = base;
        n.update(extra);
        return n;
    };
    return {
        make("pma_location", "pma_run", kLocation, with({{"checkpoints", {0.5, 1.0}}, {"identities", true}}),
             {{"kind", "sinkhorn_location"}, {"param", 0.5}}),
        make("pma_scale", "pma_run", kScale, with({{"checkpoints", {0.5, 1.0}}}),
             {{"kind", "sinkhorn_scale"}, {"param", 0.5}}),
        make("fokker_planck_scale", "fokker_planck_run", kScale, with({{"checkpoints", {0.5, 1.0}}}),
             {{"kind", "fokker_planck_scale"}, {"param", 0.5}}),
        make("eps_limit", "eps_limit", kLocation, with({{"eps_list", {0.2, 0.1, 0.05}}})),
        make("sinkhorn_operators", "sinkhorn_run", kLocation, with({{"eps_list", {0.1}}, {"trials", 100}})),
        make("laplace_estimate", "laplace_estimate", {{"mu", gaussian(0.0, 4.0)}},
             with({{"L", 12.0}, {"eps_list", {0.2, 0.1, 0.05, 0.025}}})),
        make("metric_derivative", "metric_derivative", kLocation,
             with({{"t", 0.5}, {"deltas", {0.1, 0.05, 0.025}}})),
        make("kl_decay", "kl_decay", kLocation, with({{"expect_equality", true}})),
        make("diffusion", "diffusion_run", kLocation,
             with({{"particles", 100000}, {"checkpoints", {0.5, 1.0}}, {"frozen_time", 0.5}})),
        make("markov_chain", "markov_chain_run", kLocation,
             with({{"particles", 100000}, {"eps_list", {0.1}}, {"chain_steps", 10}})),
        make("gaussian_closed_form", "gaussian_closed_form", json::object(),
             with({{"checkpoints", {0.5, 1.0}}})),
    };
}

std::vector<CriterionResult> evaluate_criteria(const std::map<std::string, Report>& reports) {
    std::vector<CriterionResult> out;
    for (const auto& c : criteria()) {
        CriterionResult res{c.id, c.title, true, ""};
        std::size_t seen = 0;
        std::string worst;
        for (const auto& [run, prefix] : c.parts) {
            const auto it = reports.find(run);
            if (it == reports.end()) {
                res.passed = false;
                worst += std::string(worst.empty() ? "" : "; ") + "missing run " + run;
                continue;
            }
            for (const auto& v : it->second.verdicts) {
                if (v.name.rfind(prefix, 0) != 0 && v.name.rfind("exception", 0) != 0) continue;
                ++seen;
                if (!v.passed) {
                    res.passed = false;
                    worst += (worst.empty() ? "" : "; ") + describe(v);
                }
            }
        }
        if (seen == 0) res.passed = false;
        res.detail = res.passed ? std::to_string(seen) + " checks" : worst;
        out.push_back(res);
    }
    return out;
}

VerifyPass verify_pass(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto start = utc_now();
    VerifyPass pass;
    json configs = json::array();
    std::string hashes;
    for (const auto& c : verify_configs()) {
        const auto name = c.output["directory"].get<std::string>();
        const auto sub = dir / name;
        fs::create_directories(sub);
        Report r;
        try {
            r = run_experiment(c, sub);
        } catch (const std::exception& e) {
            r = failed_report(c, e.what());
        }
        std::ofstream(sub / "report.json") << r.to_json().dump(2) << "\n";
        configs.push_back(to_json(c));
        hashes += r.config_hash;
        pass.reports.emplace(name, std::move(r));
    }
    pass.manifest = build_manifest(dir, sha256_hex(hashes), configs, start, utc_now());
    std::ofstream(dir / "manifest.json") << pass.manifest.to_json().dump(2) << "\n";
    return pass;
}

std::vector<CriterionResult> verify(const fs::path& dir) {
    const auto first = verify_pass(dir / "pass1");
    auto results = evaluate_criteria(first.reports);
    const auto second = verify_pass(dir / "pass2");
    CriterionResult det{12, "determinism", false, ""};
    const auto& a = first.manifest.checksums;
    const auto& b = second.manifest.checksums;
    std::size_t differing = 0;
    for (const auto& [file, sum] : a) {
        const auto it = b.find(file);
        if (it == b.end() || it->second != sum) {
            ++differing;
            if (det.detail.size() < 200) det.detail += file + " ";
        }
    }
    differing += b.size() > a.size() ? b.size() - a.size() : 0;
    det.passed = !a.empty() && differing == 0 && first.manifest.config_hash == second.manifest.config_hash;
    det.detail = det.passed ? std::to_string(a.size()) + " files identical"
                            : std::to_string(differing) + " files differ: " + det.detail;
    results.push_back(det);
    return results;
}

std::string format_result(const CriterionResult& r) {
    return std::string(r.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" + r.title +
           "): " + r.detail;
}

}  // namespace sinkflow::harness
