#include "cli.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "relucode/codes.hpp"
#include "relucode/dataset.hpp"
#include "relucode/errors.hpp"
#include "relucode/files.hpp"
#include "relucode/network.hpp"
#include "relucode/parallel.hpp"
#include "relucode/polyhedra.hpp"
#include "relucode/tessellation.hpp"
#include "relucode/trainer.hpp"

namespace relucode::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Manifest {
 public:
  explicit Manifest(std::string command)
      : command_(std::move(command)),
        start_(std::chrono::steady_clock::now()),
        started_at_(std::time(nullptr)) {}

  json config = json::object();

  void add_input(const fs::path& path) { inputs_.push_back(path); }

  void write(const fs::path& path) const {
    json doc;
    doc["command"] = command_;
    doc["config"] = config;
    json inputs = json::array();
    for (const auto& p : inputs_) {
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx",
                    static_cast<unsigned long long>(fnv1a64(read_file(p))));
      inputs.push_back({{"path", p.string()}, {"fnv1a64", hex}});
    }
    doc["inputs"] = inputs;
    doc["version"] = RELUCODE_VERSION;
    char stamp[32];
    std::tm tm{};
    gmtime_r(&started_at_, &tm);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    doc["started_at"] = stamp;
    doc["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file(path, doc.dump(1) + "\n");
  }

 private:
  std::string command_;
  std::vector<fs::path> inputs_;
  std::chrono::steady_clock::time_point start_;
  std::time_t started_at_;
};

fs::path manifest_beside(const fs::path& file) { return fs::path(file.string() + ".manifest.json"); }

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ValidationError(std::string(what) + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string(what) + " is empty");
  return out;
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<fs::path> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (out.empty()) throw ValidationError("no files match '" + pattern + "'");
  return out;  // glob sorts
}

// ---- commands -------------------------------------------------------------------

struct CodesArgs {
  std::string net, data, labels, out, format = "rcc";
};

int cmd_codes(const CodesArgs& a, std::ostream& out) {
  Manifest manifest("codes");
  manifest.config = {{"net", a.net}, {"data", a.data}, {"out", a.out}, {"format", a.format}};
  const auto net = load_network(a.net);
  const auto data = load_dataset(a.data);
  manifest.add_input(a.net);
  manifest.add_input(a.data);
  if (data.dim() != net.input_dim()) {
    throw ShapeError(a.data + ": dataset has dimension " + std::to_string(data.dim()) +
                     " but " + a.net + " expects input dimension " +
                     std::to_string(net.input_dim()));
  }
  const auto packed = codes_of_batch(net, data.points);
  CodeSet set{packed.bits, packed.fingerprint, {}};
  set.codes.reserve(packed.size());
  for (std::size_t i = 0; i < packed.size(); ++i) set.codes.push_back(packed.code(i));
  std::vector<Code> sorted = set.codes;
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = static_cast<std::size_t>(
      std::unique(sorted.begin(), sorted.end()) - sorted.begin());

  ensure_parent(a.out);
  write_file(a.out, a.format == "text" ? to_rcc_text(set) : to_rcc_binary(set));
  manifest.write(manifest_beside(a.out));
  out << "code length: " << set.bits << "\n"
      << "dataset size: " << data.size() << "\n"
      << "distinct codes: " << distinct << "\n";
  return kOk;
}

struct CensusArgs {
  std::string checkpoints, data, labels, out;
};

int cmd_census(const CensusArgs& a, std::ostream& out) {
  Manifest manifest("census");
  manifest.config = {{"checkpoints", a.checkpoints}, {"data", a.data}, {"labels", a.labels},
                     {"out", a.out}};
  const auto paths = expand_glob(a.checkpoints);
  const auto data = a.labels.empty() ? load_dataset(a.data) : load_dataset(a.data, fs::path(a.labels));
  manifest.add_input(a.data);
  if (!a.labels.empty()) manifest.add_input(a.labels);
  for (const auto& p : paths) manifest.add_input(p);

  // Predictions need labels and a head sidecar for every checkpoint.
  std::optional<std::vector<std::vector<int>>> predictions;
  const bool heads = std::all_of(paths.begin(), paths.end(),
                                 [](const fs::path& p) { return fs::exists(head_path(p)); });
  if (data.labeled() && heads) {
    predictions.emplace();
    for (const auto& p : paths) {
      predictions->push_back(predict_all(load_network(p), load_head(head_path(p)), data));
    }
  }
  const auto series = census_series(paths, data, predictions);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_file(dir / "census_summary.csv", census_summary_csv(series));
  for (std::size_t i = 0; i < series.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof name, "cells_epoch_%04d.csv", series[i].epoch_tag.value_or(0));
    write_file(dir / name, census_cells_csv(series[i]));
  }
  manifest.write(dir / "manifest.json");
  out << census_summary_csv(series);
  return kOk;
}

struct RegionArgs {
  std::string net, point, out;
  bool prune = false;
  double box = kDefaultBoxBound;
};

int cmd_region(const RegionArgs& a, std::ostream& out) {
  Manifest manifest("region");
  manifest.config = {{"net", a.net}, {"point", a.point}, {"out", a.out}, {"prune", a.prune}};
  const auto net = load_network(a.net);
  manifest.add_input(a.net);
  const auto values = parse_numbers(a.point, "--point");
  const Eigen::VectorXd x =
      Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw ShapeError("--point has dimension " + std::to_string(x.size()) + " but " + a.net +
                     " expects input dimension " + std::to_string(net.input_dim()));
  }
  auto poly = region_of(net, x);
  const auto full_rows = poly.rows();
  if (a.prune) poly = prune_redundant(poly);

  const fs::path json_path(a.out);
  fs::path ine_path = json_path;
  ine_path.replace_extension(".ine");
  ensure_parent(json_path);
  write_file(json_path, to_json(poly));
  write_file(ine_path, to_ine(poly));
  manifest.write(manifest_beside(json_path));
  out << "code: " << code_of(net, x).to_string() << "\n"
      << "rows: " << poly.rows();
  if (a.prune) out << " (of " << full_rows << ")";
  out << "\n";
  if (const auto ball = chebyshev_center(poly, a.box)) {
    out << "chebyshev radius: " << ball->radius << "\n";
  }
  return kOk;
}

struct AdjacencyArgs {
  std::string codes, out;
};

int cmd_adjacency(const AdjacencyArgs& a, std::ostream& out) {
  Manifest manifest("adjacency");
  manifest.config = {{"codes", a.codes}, {"out", a.out}};
  const auto set = load_code_set(a.codes);
  manifest.add_input(a.codes);
  const auto graph = adjacency_graph(set.codes);
  ensure_parent(a.out);
  write_file(a.out, to_json(graph));
  manifest.write(manifest_beside(a.out));
  out << "nodes: " << graph.nodes.size() << "\n"
      << "edges: " << graph.edges.size() << "\n";
  return kOk;
}

struct DistmatArgs {
  std::string codes, theta = "inf", out, format;
  std::size_t max_codes = kDefaultMaxMatrixCodes;
};

int cmd_distmat(const DistmatArgs& a, std::ostream& out) {
  Manifest manifest("distmat");
  manifest.config = {{"codes", a.codes}, {"theta", a.theta}, {"out", a.out},
                     {"max_codes", a.max_codes}};
  const auto theta = Threshold::parse(a.theta);
  const auto set = load_code_set(a.codes);
  manifest.add_input(a.codes);
  const auto matrix = distance_matrix(set.codes, theta, a.max_codes);
  MatrixFormat requested = fs::path(a.out).extension() == ".rcd" ? MatrixFormat::binary
                                                                  : MatrixFormat::csv;
  if (a.format == "csv") requested = MatrixFormat::csv;
  if (a.format == "rcd") requested = MatrixFormat::binary;
  manifest.config["format"] = requested == MatrixFormat::binary ? "rcd" : "csv";
  ensure_parent(a.out);
  const auto written = write_distance_matrix(matrix, a.out, requested);
  manifest.write(manifest_beside(a.out));
  out << "codes: " << matrix.n << "\n"
      << "format: " << (written == MatrixFormat::binary ? "rcd" : "csv") << "\n";
  return kOk;
}

struct GridArgs {
  std::string net, bounds = "-1,1", out;
  std::size_t res = 256;
};

int cmd_grid(const GridArgs& a, std::ostream& out) {
  Manifest manifest("grid");
  manifest.config = {{"net", a.net}, {"bounds", a.bounds}, {"res", a.res}, {"out", a.out}};
  const auto net = load_network(a.net);
  manifest.add_input(a.net);
  const auto b = parse_numbers(a.bounds, "--bounds");
  std::array<std::pair<double, double>, 2> box;
  if (b.size() == 2) {
    box = {{{b[0], b[1]}, {b[0], b[1]}}};
  } else if (b.size() == 4) {
    box = {{{b[0], b[1]}, {b[2], b[3]}}};
  } else {
    throw ValidationError("--bounds takes 'lo,hi' or 'xlo,xhi,ylo,yhi'");
  }
  for (const auto& [lo, hi] : box) {
    if (!(lo < hi)) throw ValidationError("--bounds: low must be below high");
  }
  const auto grid = grid_tessellation(net, box, a.res);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_grid(grid, dir);
  manifest.write(dir / "manifest.json");
  std::size_t unit = 0;
  for (const auto& p : grid.neighbor_pairs) unit += p.hamming == 1 ? 1 : 0;
  out << "distinct codes: " << grid.id_to_code.size() << "\n"
      << "neighbor pairs: " << grid.neighbor_pairs.size() << " (" << unit
      << " at distance 1)\n";
  return kOk;
}

struct TrainArgs {
  std::string config, out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  Manifest manifest("train");
  auto cfg = TrainConfig::from_json(read_file(a.config));
  manifest.add_input(a.config);
  if (!a.out.empty()) cfg.checkpoint_dir = a.out;
  manifest.config = json::parse(cfg.to_json());
  const auto result = train(cfg);
  manifest.write(cfg.checkpoint_dir / "manifest.json");
  const auto& last = result.metrics.back();
  out << "checkpoints: " << result.checkpoints.size() << "\n"
      << "final loss: " << last.loss << "\n"
      << "final accuracy: " << last.accuracy << "\n";
  return kOk;
}

struct VerifyArgs {
  std::string net;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const auto net = load_network(a.net);
  DualityOptions opts;
  opts.samples = a.samples;
  opts.seed = a.seed;
  const auto r = verify_duality(net, opts);
  out << "points: " << r.points << " (rejected near boundary: " << r.rejected_near_boundary << ")\n"
      << "residual checks: " << r.residual_checks - r.residual_failures << " passed, "
      << r.residual_failures << " failed\n"
      << "pair checks: " << r.pair_checks - r.pair_failures << " passed, " << r.pair_failures
      << " failed (" << r.equal_code_pairs << " equal-code pairs)\n"
      << "worst residual: " << r.worst_residual << "\n"
      << (r.passed() ? "PASS" : "FAIL") << "\n";
  return r.passed() ? kOk : kPropertyFailure;
}

int thread_cap_from_env() {
  const char* env = std::getenv("RELUCODE_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0) throw ValidationError("RELUCODE_THREADS must be a non-negative integer");
  return static_cast<int>(v);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Activation-code analysis of fully connected ReLU networks", "relucode"};
  app.set_version_flag("--version", std::string(RELUCODE_VERSION));
  app.require_subcommand(1);
  app.fallthrough();
  int threads = -1;
  app.add_option("--threads", threads, "Cap on worker threads (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);

  std::function<int()> action;

  CodesArgs codes;
  auto* c = app.add_subcommand("codes", "Activation codes of every dataset row");
  c->add_option("--net", codes.net, "Weight file (RCW-JSON or RCW-BIN)")->required();
  c->add_option("--data", codes.data, "Dataset (CSV or RCD-F32)")->required();
  c->add_option("--out", codes.out, "Output code set")->required();
  c->add_option("--format", codes.format, "rcc or text")->check(CLI::IsMember({"rcc", "text"}));
  c->callback([&] { action = [&] { return cmd_codes(codes, out); }; });

  CensusArgs census_args;
  auto* cs = app.add_subcommand("census", "Cell census over a series of checkpoints");
  cs->add_option("--checkpoints", census_args.checkpoints, "Glob of weight files")->required();
  cs->add_option("--data", census_args.data, "Dataset")->required();
  cs->add_option("--labels", census_args.labels, "Label file, one integer per line");
  cs->add_option("--out", census_args.out, "Output directory")->required();
  cs->callback([&] { action = [&] { return cmd_census(census_args, out); }; });

  RegionArgs region;
  auto* rg = app.add_subcommand("region", "H-representation of the cell containing a point");
  rg->add_option("--net", region.net, "Weight file")->required();
  rg->add_option("--point", region.point, "Comma separated coordinates")->required();
  rg->add_option("--out", region.out, "Output JSON; the .ine file is written beside it")->required();
  rg->add_flag("--prune", region.prune, "Drop LP-certified redundant rows");
  rg->add_option("--box", region.box, "Half width of the box used for the Chebyshev ball")
      ->check(CLI::PositiveNumber);
  rg->callback([&] { action = [&] { return cmd_region(region, out); }; });

  AdjacencyArgs adjacency;
  auto* ad = app.add_subcommand("adjacency", "Graph of codes at Hamming distance 1");
  ad->add_option("--codes", adjacency.codes, "Code set (RCC binary or text)")->required();
  ad->add_option("--out", adjacency.out, "Output JSON")->required();
  ad->callback([&] { action = [&] { return cmd_adjacency(adjacency, out); }; });

  DistmatArgs distmat;
  auto* dm = app.add_subcommand("distmat", "Truncated Hamming distance matrix");
  dm->add_option("--codes", distmat.codes, "Code set")->required();
  dm->add_option("--theta", distmat.theta, "Positive integer or inf");
  dm->add_option("--out", distmat.out, "Output path (.rcd selects the binary form)")->required();
  dm->add_option("--format", distmat.format, "csv or rcd")->check(CLI::IsMember({"csv", "rcd"}));
  dm->add_option("--max-codes", distmat.max_codes, "Refuse larger code sets");
  dm->callback([&] { action = [&] { return cmd_distmat(distmat, out); }; });

  GridArgs grid;
  auto* gr = app.add_subcommand("grid", "Sample the tessellation of a 2-D input box");
  gr->add_option("--net", grid.net, "Weight file")->required();
  gr->add_option("--bounds", grid.bounds, "lo,hi or xlo,xhi,ylo,yhi");
  gr->add_option("--res", grid.res, "Pixels per axis");
  gr->add_option("--out", grid.out, "Output directory")->required();
  gr->callback([&] { action = [&] { return cmd_grid(grid, out); }; });

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Train the toy classifier and write checkpoints");
  tr->add_option("--config", train_args.config, "JSON training config")->required();
  tr->add_option("--out", train_args.out, "Override the checkpoint directory");
  tr->callback([&] { action = [&] { return cmd_train(train_args, out); }; });

  VerifyArgs verify;
  auto* vf = app.add_subcommand("verify", "Run the code/cell duality property suite");
  vf->add_option("--net", verify.net, "Weight file")->required();
  vf->add_option("--samples", verify.samples, "Number of sample points")->check(CLI::PositiveNumber);
  vf->add_option("--seed", verify.seed, "Sampling seed")->required();
  vf->callback([&] { action = [&] { return cmd_verify(verify, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    set_thread_count(threads >= 0 ? threads : thread_cap_from_env());
    return action();
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const TrainingDivergedError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace relucode::cli
