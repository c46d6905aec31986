#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "merr/dataset.hpp"
#include "merr/regressor.hpp"

namespace merr {

/// Shortest decimal form that parses back to the same double.
std::string format_real(double value);
double parse_real(const std::string& text);

/// One point per row, d comma-separated columns, no header.
PointBag read_bag_csv(const std::filesystem::path& path);
void write_bag_csv(const std::filesystem::path& path, const PointBag& bag);

/// Manifest rows `bag_path,y_1,...,y_d`; an optional header row starting with
/// `bag_path` is skipped. Relative bag paths resolve against the manifest's
/// directory.
struct Manifest {
  std::vector<std::filesystem::path> bag_paths;
  Eigen::MatrixXd labels;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& bag_paths,
                    const Eigen::MatrixXd& labels);

LabeledDataset load_dataset(const std::filesystem::path& manifest_path,
                            double label_bound = std::numeric_limits<double>::infinity());

/// Plain numeric CSV, optional header row.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& header = {});
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

inline constexpr const char* kModelHeader = "MERR-MODEL v1";

/// Flat text model: versioned header, specs, lambda, jitter, bag file
/// references (absolute) and the dual matrix at full precision.
void save_model(const std::filesystem::path& path, const TrainedModel& model,
                const std::vector<std::filesystem::path>& bag_paths);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace merr
