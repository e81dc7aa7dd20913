#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gfl/verify.hpp"

namespace gfl {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double x);

// Graph files: {"n": int, "edges": [[tail, head, resistance], ...]}.
std::string graph_to_json(const Graph& g);
/// Throws InvalidArgument naming the first offending edge index.
Graph graph_from_json(std::string_view text);
void save_graph(const Graph& g, const std::filesystem::path& path);
Graph load_graph(const std::filesystem::path& path);

// Weight bundles: {"layout": [{"block", "begin", "size"}...], "layers": [{"value", "query_key", "residual"}...]}
// with row-major nested arrays.
struct WeightBundle {
  BlockLayout layout;
  std::vector<LayerWeights> layers;
};

std::string weights_to_json(const BlockLayout& layout, std::span<const LayerWeights> layers);
WeightBundle weights_from_json(std::string_view text);

std::string task_to_json(const TaskSpec& task);
/// Missing fields keep their TaskSpec defaults.
TaskSpec task_from_json(std::string_view text);

std::string report_to_json(const ErrorReport& report);
/// JSON array of reports.
std::string reports_to_json(std::span<const ErrorReport> reports);

/// "task,trial,layer,error,bound,satisfied,lambda_min,lambda_max"
std::string_view csv_header();
/// One row per reported layer; bound and satisfied are "na" where no bound
/// applies. A failed trial gives a single row with satisfied = "failed".
std::string report_csv_rows(const ErrorReport& report);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace gfl
