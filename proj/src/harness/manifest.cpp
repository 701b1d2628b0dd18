#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include "sinkflow/harness.hpp"

namespace sinkflow::harness {

namespace fs = std::filesystem;

bool Report::passed() const {
    for (const auto& v : verdicts)
        if (!v.passed) return false;
    return true;
}

json Report::to_json() const {
    json vs = json::array();
    for (const auto& v : verdicts) {
        json j = {{"name", v.name},
                  {"value", v.value},
                  {"comparison", v.comparison},
                  {"tolerance", v.tolerance},
                  {"passed", v.passed}};
        if (v.comparison == "in") j["upper"] = v.upper;
        vs.push_back(j);
    }
    return {{"experiment", experiment}, {"config_hash", config_hash}, {"rows", rows}, {"verdicts", vs}};
}

void Report::check_le(const std::string& name, double value, double bound) {
    verdicts.push_back({name, value, bound, "<=", value <= bound});
}

void Report::check_ge(const std::string& name, double value, double bound) {
    verdicts.push_back({name, value, bound, ">=", value >= bound});
}

void Report::check_in(const std::string& name, double value, double lo, double hi) {
    verdicts.push_back({name, value, lo, "in", value >= lo && value <= hi, hi});
}

json RunManifest::to_json() const {
    return {{"config_hash", config_hash}, {"config", config},       {"start_time", start_time},
            {"end_time", end_time},       {"checksums", checksums}, {"version", version}};
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunManifest build_manifest(const fs::path& dir, const std::string& hash, const json& config,
                           const std::string& start, const std::string& end) {
    RunManifest m{hash, config, start, end, {}};
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        m.checksums[fs::relative(e.path(), dir).generic_string()] = file_sha256(e.path());
    }
    return m;
}

fs::path output_root() {
    const char* env = std::getenv(kOutputRootEnv);
    return env && *env ? fs::path(env) : fs::path("sinkflow_out");
}

Report run_and_record(const ExperimentConfig& c, const fs::path& dir) {
    fs::create_directories(dir);
    const auto start = utc_now();
    auto report = run_experiment(c, dir);
    std::ofstream(dir / "report.json") << report.to_json().dump(2) << "\n";
    const auto m = build_manifest(dir, report.config_hash, to_json(c), start, utc_now());
    std::ofstream(dir / "manifest.json") << m.to_json().dump(2) << "\n";
    return report;
}

}  // namespace sinkflow::harness
