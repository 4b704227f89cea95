#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace levyup {

// Outcome of one named verification. `passed` is derived, never set by hand:
// statistic <= critical_value (CI-containment tests encode the z-score as the
// statistic and the z-threshold as the critical value).
struct TestReport {
    std::string test_name;
    double statistic = 0.0;
    double critical_value = 0.0;
    bool passed = false;
    long n_samples = 0;
    std::vector<std::uint64_t> seeds;
    std::string model_label;
    std::map<std::string, double> parameters;  // ordered, for stable JSON
    std::string notes;
};

inline TestReport make_report(std::string name, double statistic, double critical, long n,
                              std::vector<std::uint64_t> seeds, std::string model_label,
                              std::map<std::string, double> parameters = {},
                              std::string notes = {}) {
    TestReport r;
    r.test_name = std::move(name);
    r.statistic = statistic;
    r.critical_value = critical;
    r.passed = statistic <= critical;
    r.n_samples = n;
    r.seeds = std::move(seeds);
    r.model_label = std::move(model_label);
    r.parameters = std::move(parameters);
    r.notes = std::move(notes);
    return r;
}

inline nlohmann::ordered_json to_json(const TestReport& r) {
    nlohmann::ordered_json j;
    j["test_name"] = r.test_name;
    j["statistic"] = r.statistic;
    j["critical_value"] = r.critical_value;
    j["passed"] = r.passed;
    j["n_samples"] = r.n_samples;
    j["seeds"] = r.seeds;
    j["model_label"] = r.model_label;
    j["parameters"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.parameters) j["parameters"][k] = v;
    j["notes"] = r.notes;
    return j;
}

// Tidy table for plot-data emission: fixed column set, one row per point.
struct CurveData {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline void write_csv(const CurveData& c, std::ostream& os) {
    os.precision(17);
    for (std::size_t i = 0; i < c.columns.size(); ++i)
        os << (i ? "," : "") << c.columns[i];
    os << '\n';
    for (const auto& row : c.rows) {
        if (row.size() != c.columns.size()) throw std::logic_error("ragged curve row");
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << '\n';
    }
}

inline void write_report_files(const std::filesystem::path& dir, const TestReport& report,
                               const std::vector<CurveData>& curves = {}) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / (report.test_name + ".json"));
        if (!os) throw std::runtime_error("cannot write report for " + report.test_name);
        os << to_json(report).dump(2) << '\n';
    }
    for (const auto& c : curves) {
        std::ofstream os(dir / (report.test_name + "_" + c.name + ".csv"));
        if (!os) throw std::runtime_error("cannot write curve csv for " + report.test_name);
        write_csv(c, os);
    }
}

}  // namespace levyup
