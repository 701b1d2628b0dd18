#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sinkflow/harness.hpp"

namespace fs = std::filesystem;
namespace hx = sinkflow::harness;

int main(int argc, char** argv) {
    CLI::App app{"sinkflow experiment harness"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override numerics.seed");

    std::string config_path;
    auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
    run->add_option("config", config_path, "config.json")->required()->check(CLI::ExistingFile);

    std::string kind;
    double param = 0.0, t_max = 1.0;
    std::size_t steps = 100;
    auto* tab = app.add_subcommand("tabulate", "print a closed-form flow as t,value CSV");
    tab->add_option("kind", kind, "flow kind, e.g. sinkhorn_scale")->required();
    tab->add_option("--param", param, "theta or eta");
    tab->add_option("--t-max", t_max, "last time");
    tab->add_option("--steps", steps, "number of intervals");

    bool once = false;
    auto* ver = app.add_subcommand("verify", "run the acceptance suite");
    ver->add_flag("--once", once, "skip the second pass used by the determinism check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            std::ifstream in(config_path);
            auto doc = hx::json::parse(in);
            if (seed) doc["numerics"]["seed"] = *seed;
            const auto cfg = hx::parse_config(doc);
            const auto dir = hx::output_root() / cfg.output["directory"].get<std::string>();
            const auto report = hx::run_and_record(cfg, dir);
            for (const auto& v : report.verdicts)
                std::cout << (v.passed ? "PASS " : "FAIL ") << v.name << " = " << v.value << "\n";
            std::cout << "outputs in " << dir.string() << "\n";
            return report.passed() ? 0 : 1;
        }
        if (*tab) {
            hx::tabulate(kind, param, t_max, steps, std::cout);
            return 0;
        }
        if (seed) std::cerr << "--seed is ignored by verify\n";
        const auto dir = hx::output_root() / "verify";
        std::vector<hx::CriterionResult> results;
        if (once) {
            results = hx::evaluate_criteria(hx::verify_pass(dir / "pass1").reports);
        } else {
            results = hx::verify(dir);
        }
        bool ok = true;
        for (const auto& r : results) {
            std::cout << hx::format_result(r) << "\n";
            ok = ok && r.passed;
        }
        return ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
