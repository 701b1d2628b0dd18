#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sinkflow/errors.hpp"

namespace sinkflow::harness {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputRootEnv = "SINKFLOW_OUTPUT_ROOT";

struct ExperimentConfig {
    std::string experiment;
    json problem;
    json numerics;
    json oracle;
    json output;

    double num(const char* key) const { return numerics.at(key).get<double>(); }
    double tol(const char* key) const { return numerics.at("tolerances").at(key).get<double>(); }
    std::uint64_t seed() const { return numerics.at("seed").get<std::uint64_t>(); }
    std::size_t n() const { return numerics.at("n").get<std::size_t>(); }
    std::vector<double> list(const char* key) const {
        return numerics.at(key).get<std::vector<double>>();
    }
};

// fills defaults and validates; throws ConfigError
ExperimentConfig parse_config(const json& doc);
json to_json(const ExperimentConfig& c);
std::string config_hash(const ExperimentConfig& c);
std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::filesystem::path& p);

struct Verdict {
    std::string name;
    double value;
    double tolerance;
    std::string comparison;  // "<=", ">=", "in"
    bool passed;
    double upper = 0.0;      // second bound for "in"
};

struct Report {
    std::string experiment;
    std::string config_hash;
    json rows = json::array();
    std::vector<Verdict> verdicts;

    bool passed() const;
    json to_json() const;
    void check_le(const std::string& name, double value, double bound);
    void check_ge(const std::string& name, double value, double bound);
    void check_in(const std::string& name, double value, double lo, double hi);
};

struct RunManifest {
    std::string config_hash;
    json config;
    std::string start_time;
    std::string end_time;
    std::map<std::string, std::string> checksums;
    std::string version = kVersion;

    json to_json() const;
};

// checksums every regular file under `dir` except the manifest itself
RunManifest build_manifest(const std::filesystem::path& dir, const std::string& hash,
                           const json& config, const std::string& start, const std::string& end);
std::string utc_now();

std::filesystem::path output_root();

// runs one experiment, writes its CSV/SVG/report into `dir`, returns the report
Report run_experiment(const ExperimentConfig& c, const std::filesystem::path& dir);
Report run_eps_limit(const ExperimentConfig& c, const std::filesystem::path& dir);
Report run_laplace_estimate(const ExperimentConfig& c, const std::filesystem::path& dir);

// `run` subcommand: experiment + report.json + manifest.json
Report run_and_record(const ExperimentConfig& c, const std::filesystem::path& dir);

// writes `t,value` for a closed-form flow
void tabulate(const std::string& kind, double param, double t_max, std::size_t steps,
              std::ostream& os);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct AxesSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

std::string emit_svg(const std::vector<Series>& table, const AxesSpec& axes);

// acceptance suite
struct CriterionResult {
    int id;
    std::string title;
    bool passed;
    std::string detail;
};

std::vector<ExperimentConfig> verify_configs();
// criteria 1-11 from one pass of the verify configs written under `dir`
std::vector<CriterionResult> evaluate_criteria(const std::map<std::string, Report>& reports);
struct VerifyPass {
    std::map<std::string, Report> reports;
    RunManifest manifest;
};
VerifyPass verify_pass(const std::filesystem::path& dir);
// full suite: one pass for criteria 1-11, a second pass for the determinism check
std::vector<CriterionResult> verify(const std::filesystem::path& dir);
std::string format_result(const CriterionResult& r);

}  // namespace sinkflow::harness
