#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "granlab/harness.hpp"

namespace granlab {

inline constexpr const char* kCsvVersionLine = "# granlab sweep csv v1";
inline constexpr const char* kCsvHeader =
    "axis_value,acc_fine_mean,acc_fine_median,acc_coarse_mean,acc_coarse_median,delta,"
    "spread_low,spread_high,n_over_p,replicates,fine_low,fine_high,coarse_low,coarse_high,"
    "failed";

// Numbers with 9 significant digits, '.' separator.
std::string format_csv_number(double v);

std::string points_to_csv(const std::vector<AggregatedPoint>& points);
// Throws ParseError naming the 1-based line on malformed input.
std::vector<AggregatedPoint> points_from_csv(const std::string& text);

std::string experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const std::string& text);
TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

std::string run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);

std::string archive_to_json(const SweepResult& result);
SweepResult archive_from_json(const std::string& text);

// Writes <dir>/<stem>.csv and <dir>/<stem>.json. Throws IoError with the path.
void persist(const SweepResult& result, const std::filesystem::path& dir,
             const std::string& stem = "sweep");
SweepResult load_archive(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace granlab
