#include "gfl/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gfl {

namespace {

using nlohmann::json;

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string(what) + ": malformed JSON: " + e.what());
  }
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, int size, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != size) {
    throw InvalidArgument(where + ": expected " + std::to_string(size) + " rows");
  }
  Matrix m(size, size);
  for (int r = 0; r < size; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != size) {
      throw InvalidArgument(where + ": row " + std::to_string(r) + " must have " + std::to_string(size) + " entries");
    }
    for (int c = 0; c < size; ++c) {
      const auto& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw InvalidArgument(where + ": non-numeric entry at (" + std::to_string(r) + ", " +
                                                std::to_string(c) + ")");
      m(r, c) = x.get<double>();
    }
  }
  return m;
}

Block parse_block(const std::string& name) {
  for (Block b : {Block::incidence, Block::lambda, Block::phi, Block::gamma, Block::whole}) {
    if (to_string(b) == name) return b;
  }
  throw InvalidArgument("unknown block name '" + name + "'");
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json report_json(const ErrorReport& r) {
  json layers = json::array();
  for (const auto& l : r.layers) {
    const auto sat = l.satisfied();
    layers.push_back({{"layer", l.layer},
                      {"error", l.error},
                      {"bound", optional_number(l.bound)},
                      {"satisfied", sat ? json(*sat) : json(nullptr)},
                      {"loss", optional_number(l.loss)}});
  }
  return {{"task", json::parse(task_to_json(r.task))},
          {"engine", std::string(to_string(r.engine))},
          {"metadata",
           {{"seed", r.metadata.seed},
            {"trial", r.metadata.trial},
            {"prng", r.metadata.prng},
            {"lambda_min", r.metadata.lambda_min},
            {"lambda_max", r.metadata.lambda_max},
            {"n", r.metadata.n},
            {"d", r.metadata.d}}},
          {"failure", r.failed() ? json(r.failure) : json(nullptr)},
          {"layers", std::move(layers)}};
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.tail, e.head, e.resistance});
  return json{{"n", g.num_vertices()}, {"edges", std::move(edges)}}.dump() + "\n";
}

Graph graph_from_json(std::string_view text) {
  const json j = parse(text, "graph file");
  if (!j.is_object()) throw InvalidArgument("graph file: top level must be an object");
  if (!j.contains("n") || !j["n"].is_number_integer()) throw InvalidArgument("graph file: \"n\" must be an integer");
  if (!j.contains("edges") || !j["edges"].is_array()) throw InvalidArgument("graph file: \"edges\" must be an array");

  std::vector<Edge> edges;
  edges.reserve(j["edges"].size());
  for (std::size_t i = 0; i < j["edges"].size(); ++i) {
    const auto& e = j["edges"][i];
    const std::string where = "graph file: edge " + std::to_string(i);
    if (!e.is_array() || e.size() != 3) throw InvalidArgument(where + " must be [tail, head, resistance]");
    if (!e[0].is_number_integer() || !e[1].is_number_integer()) {
      throw InvalidArgument(where + ": tail and head must be integers");
    }
    if (!e[2].is_number()) throw InvalidArgument(where + ": resistance must be a number");
    edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
  }
  return Graph(j["n"].get<int>(), std::move(edges));
}

void save_graph(const Graph& g, const std::filesystem::path& path) { write_text(path, graph_to_json(g)); }

Graph load_graph(const std::filesystem::path& path) { return graph_from_json(read_text(path)); }

std::string weights_to_json(const BlockLayout& layout, std::span<const LayerWeights> layers) {
  json blocks = json::array();
  for (const auto& r : layout.blocks()) {
    blocks.push_back({{"block", std::string(to_string(r.name))}, {"begin", r.begin}, {"size", r.size}});
  }
  json ls = json::array();
  for (const auto& w : layers) {
    if (w.height() != layout.height()) throw InvalidArgument("weights_to_json: layer height does not match layout");
    ls.push_back({{"value", matrix_to_json(w.value)},
                  {"query_key", matrix_to_json(w.query_key)},
                  {"residual", matrix_to_json(w.residual)}});
  }
  return json{{"layout", std::move(blocks)}, {"layers", std::move(ls)}}.dump() + "\n";
}

WeightBundle weights_from_json(std::string_view text) {
  const json j = parse(text, "weights file");
  if (!j.is_object() || !j.contains("layout") || !j["layout"].is_array() || !j.contains("layers") ||
      !j["layers"].is_array()) {
    throw InvalidArgument("weights file: expected {\"layout\": [...], \"layers\": [...]}");
  }
  std::vector<BlockRange> blocks;
  try {
    for (const auto& b : j["layout"]) {
      blocks.push_back({parse_block(b.at("block").get<std::string>()), b.at("begin").get<int>(), b.at("size").get<int>()});
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("weights file: bad layout entry: ") + e.what());
  }
  WeightBundle out{BlockLayout::from_blocks(std::move(blocks)), {}};
  const int h = out.layout.height();
  for (std::size_t l = 0; l < j["layers"].size(); ++l) {
    const auto& w = j["layers"][l];
    const std::string where = "weights file: layer " + std::to_string(l);
    if (!w.is_object() || !w.contains("value") || !w.contains("query_key") || !w.contains("residual")) {
      throw InvalidArgument(where + " needs value, query_key and residual");
    }
    out.layers.push_back({matrix_from_json(w["value"], h, where + " value"),
                          matrix_from_json(w["query_key"], h, where + " query_key"),
                          matrix_from_json(w["residual"], h, where + " residual")});
  }
  return out;
}

std::string task_to_json(const TaskSpec& t) {
  return json{{"kind", std::string(to_string(t.kind))},
              {"layers", t.layers},
              {"step", t.step},
              {"temperature", t.temperature},
              {"k", t.k},
              {"shift", t.shift},
              {"lambda_max_hint", t.lambda_max_hint}}
             .dump();
}

TaskSpec task_from_json(std::string_view text) {
  const json j = parse(text, "task");
  if (!j.is_object()) throw InvalidArgument("task: top level must be an object");
  TaskSpec t;
  try {
    const auto kind = parse_task_kind(j.at("kind").get<std::string>());
    if (!kind) throw InvalidArgument("task: unknown kind " + j.at("kind").dump());
    t.kind = *kind;
    if (j.contains("layers")) t.layers = j["layers"].get<int>();
    if (j.contains("step")) t.step = j["step"].get<double>();
    if (j.contains("temperature")) t.temperature = j["temperature"].get<double>();
    if (j.contains("k")) t.k = j["k"].get<int>();
    if (j.contains("shift")) t.shift = j["shift"].get<double>();
    if (j.contains("lambda_max_hint")) t.lambda_max_hint = j["lambda_max_hint"].get<double>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("task: ") + e.what());
  }
  return t;
}

std::string report_to_json(const ErrorReport& report) { return report_json(report).dump(2) + "\n"; }

std::string reports_to_json(std::span<const ErrorReport> reports) {
  json all = json::array();
  for (const auto& r : reports) all.push_back(report_json(r));
  return all.dump(2) + "\n";
}

std::string_view csv_header() { return "task,trial,layer,error,bound,satisfied,lambda_min,lambda_max"; }

std::string report_csv_rows(const ErrorReport& report) {
  const std::string prefix = std::string(to_string(report.task.kind)) + "," + std::to_string(report.metadata.trial) + ",";
  const std::string suffix =
      "," + format_double(report.metadata.lambda_min) + "," + format_double(report.metadata.lambda_max) + "\n";
  if (report.failed()) return prefix + ",,,failed" + suffix;

  std::string out;
  for (const auto& l : report.layers) {
    const auto sat = l.satisfied();
    out += prefix + std::to_string(l.layer) + "," + format_double(l.error) + "," +
           (l.bound ? format_double(*l.bound) : "na") + "," + (sat ? (*sat ? "true" : "false") : "na") + suffix;
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace gfl
