#pragma once

#include "z2neck/geometry.hpp"
#include "z2neck/grid.hpp"
#include "z2neck/radial_ode.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace z2neck {

struct ExperimentConfig {
    std::string experiment;
    GeometryConfig geometry;
    GridOptions grid;
    std::vector<ModeIndex> modes;
    std::vector<int> n_values;
    std::vector<int> p_values;
    std::vector<double> s_grid;
    std::vector<double> identity_s;  // stretch_identity: neck lengths for the residual check
    std::uint64_t source_seed = 11;
    std::uint64_t basis_seed = 100;  // basis source k uses basis_seed + k
    std::uint64_t sigma_seed = 900;
    std::uint64_t extra_seed = 500;
    int m = 1;       // oracle_convergence theta-mode
    int m_max = 4;   // ratio_bound sweep, A/B truncation
    int oracle_nr = 128;
    int oracle_nphi = 16;
    int oracle_doublings = 2;
    std::string output = "results";

    // throws ConfigError naming the offending key or value
    void validate() const;
};

// plain "key = value" lines; '#' starts a comment; later keys override earlier ones
std::map<std::string, std::string> read_key_values(std::istream& in, const std::string& origin);

// defaults of the named experiment overridden by the keys in kv; unknown keys are errors
ExperimentConfig make_config(const std::map<std::string, std::string>& kv);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig default_config(const std::string& experiment);

struct ExperimentInfo {
    std::string name;
    std::string summary;
};
const std::vector<ExperimentInfo>& experiment_list();

enum class Comparison { at_least, at_most, abs_within, rel_within };
const char* to_string(Comparison c);

// pass rule: at_least value >= target - tolerance, at_most value <= target + tolerance,
// abs_within |value - target| <= tolerance, rel_within |value - target| <= tolerance |target|
struct Criterion {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    Comparison comparison = Comparison::at_most;
    std::string citation;
    std::string note;
    bool pass = false;
};

Criterion make_criterion(std::string name, double value, double target, double tolerance, Comparison cmp,
                         std::string citation, std::string note = "");

struct ExperimentResult {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<Criterion> criteria;
    std::map<std::string, double> info;  // diagnostics for the summary, not pass/fail
    std::vector<std::string> warnings;

    bool passed() const;
    const Criterion& criterion(const std::string& name) const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string format_number(double v);
std::string csv_text(const ExperimentResult& r);
std::string summary_json(const ExperimentResult& r, const ExperimentConfig& cfg);
// writes <output>/<name>.csv and <output>/<name>.json
void write_result(const ExperimentResult& r, const ExperimentConfig& cfg);

}  // namespace z2neck
