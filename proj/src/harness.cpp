#include "stm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "stm/error.hpp"
#include "stm/parallel.hpp"
#include "stm/simd.hpp"
#include "stm/tensor_io.hpp"

namespace stm {
namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

constexpr std::uint64_t kFoldStream = 0xf01d;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::invalid_argument, "config: " + what);
}

std::vector<double> read_grid(const YAML::Node& node, const char* name) {
  if (node.IsSequence()) return node.as<std::vector<double>>();
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (key != "log2_from" && key != "log2_to")
        config_error(std::string(name) + ": unknown key '" + key + "'");
    }
    if (!node["log2_from"] || !node["log2_to"])
      config_error(std::string(name) + " needs log2_from and log2_to");
    return log2_grid(node["log2_from"].as<int>(), node["log2_to"].as<int>());
  }
  config_error(std::string(name) + " must be a list or {log2_from, log2_to}");
}

void read_synth(const YAML::Node& node, SynthConfig& s) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "scenario") s.scenario = parse_scenario(v.as<std::string>());
    else if (key == "mode_size") s.mode_size = v.as<std::size_t>();
    else if (key == "r_exact") s.r_exact = v.as<std::size_t>();
    else if (key == "r_approx") s.r_approx = v.as<std::size_t>();
    else if (key == "samples_per_class") s.samples_per_class = v.as<std::size_t>();
    else if (key == "seed") s.seed = v.as<std::uint64_t>();
    else if (key == "frequency_law") s.frequency_law = parse_frequency_law(v.as<std::string>());
    else config_error("synthetic: unknown key '" + key + "'");
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool row_less(const CellResult& a, const CellResult& b) {
  const auto ka = to_string(a.kernel), kb = to_string(b.kernel);
  if (ka != kb) return ka < kb;
  if (a.rank != b.rank) return a.rank < b.rank;
  const double na = a.noise.value_or(-1.0), nb = b.noise.value_or(-1.0);
  return na < nb;
}

DenseTensor to_dense(const Sample& raw) {
  if (const auto* d = std::get_if<DenseTensor>(&raw)) return *d;
  if (const auto* t = std::get_if<TuckerTensor>(&raw)) return tucker_reconstruct(*t);
  if (const auto* k = std::get_if<KruskalTensor>(&raw)) return cp_reconstruct(*k);
  return tt_reconstruct(std::get<TTTensor>(raw));
}

bool uses_tucker(KernelKind kind, DuskSource dusk) {
  return kind != KernelKind::dusk || dusk == DuskSource::tucker;
}

}  // namespace

std::string_view to_string(DuskSource s) noexcept {
  switch (s) {
    case DuskSource::tucker: return "tucker";
    case DuskSource::cp: return "cp";
    case DuskSource::tt: return "tt";
  }
  return "unknown";
}

std::vector<double> log2_grid(int from, int to) {
  std::vector<double> out;
  for (int e = from; e <= to; ++e) out.push_back(std::ldexp(1.0, e));
  return out;
}

void ExperimentConfig::validate() {
  auto nonempty = [](const auto& v, const char* name) {
    if (v.empty()) config_error(std::string(name) + " must not be empty");
  };
  nonempty(kernels, "kernels");
  nonempty(ranks, "ranks");
  nonempty(c_grid, "c_grid");
  nonempty(g_grid, "g_grid");
  if (folds < 2) config_error("folds must be >= 2");
  if (repeats < 1) config_error("repeats must be >= 1");
  if (!(smo_tol > 0.0)) config_error("smo_tol must be > 0");
  for (double c : c_grid)
    if (!(c > 0.0)) config_error("c_grid values must be > 0");
  for (double g : g_grid)
    if (!(g > 0.0)) config_error("g_grid values must be > 0");
  for (std::size_t r : ranks)
    if (r < 1) config_error("ranks must be >= 1");
  if (source == DataSource::synthetic) {
    nonempty(noise_levels, "noise_levels");
    for (double nl : noise_levels) {
      SynthConfig s = synth;
      s.noise_variance = nl;
      s.validate();
    }
    for (std::size_t r : ranks)
      if (r > synth.mode_size) config_error("rank " + std::to_string(r) + " exceeds mode_size");
  } else if (dataset_dir.empty()) {
    config_error("dataset_dir is required for a directory source");
  }
  auto sort_unique = [](auto& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  sort_unique(c_grid);
  sort_unique(g_grid);
  sort_unique(ranks);
  sort_unique(noise_levels);
  std::set<KernelKind> seen;
  std::vector<KernelKind> unique_kernels;
  for (KernelKind k : kernels)
    if (seen.insert(k).second) unique_kernels.push_back(k);
  kernels = std::move(unique_kernels);
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  ExperimentConfig cfg;
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    config_error(std::string("YAML parse error: ") + e.what());
  }
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  if (!root.IsMap()) config_error("top level must be a mapping");
  try {
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      const YAML::Node& v = kv.second;
      if (key == "source") {
        const auto s = v.as<std::string>();
        if (s == "synthetic") cfg.source = DataSource::synthetic;
        else if (s == "directory") cfg.source = DataSource::directory;
        else config_error("source must be 'synthetic' or 'directory'");
      } else if (key == "synthetic") read_synth(v, cfg.synth);
      else if (key == "noise_levels") cfg.noise_levels = v.as<std::vector<double>>();
      else if (key == "dataset_dir") cfg.dataset_dir = v.as<std::string>();
      else if (key == "kernels") {
        cfg.kernels.clear();
        for (const auto& k : v) cfg.kernels.push_back(parse_kernel_kind(k.as<std::string>()));
      } else if (key == "ranks") cfg.ranks = v.as<std::vector<std::size_t>>();
      else if (key == "c_grid") cfg.c_grid = read_grid(v, "c_grid");
      else if (key == "g_grid") cfg.g_grid = read_grid(v, "g_grid");
      else if (key == "p") cfg.p = v.as<double>();
      else if (key == "repeats") cfg.repeats = v.as<std::size_t>();
      else if (key == "folds") cfg.folds = v.as<std::size_t>();
      else if (key == "seed") cfg.seed = v.as<std::uint64_t>();
      else if (key == "output") cfg.output = v.as<std::string>();
      else if (key == "smo_tol") cfg.smo_tol = v.as<double>();
      else if (key == "dusk_source") {
        const auto s = v.as<std::string>();
        if (s == "tucker") cfg.dusk_source = DuskSource::tucker;
        else if (s == "cp") cfg.dusk_source = DuskSource::cp;
        else if (s == "tt") cfg.dusk_source = DuskSource::tt;
        else config_error("dusk_source must be tucker, cp or tt");
      } else if (key == "record_timing") cfg.record_timing = v.as<bool>();
      else if (key == "cache_decompositions") cfg.cache_decompositions = v.as<bool>();
      else config_error("unknown key '" + key + "'");
    }
  } catch (const YAML::Exception& e) {
    config_error(std::string("bad value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config(ss.str());
  if (cfg.source == DataSource::directory && cfg.dataset_dir.is_relative())
    cfg.dataset_dir = path.parent_path() / cfg.dataset_dir;
  return cfg;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::invalid_argument, "need at least 2 folds");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] < 0 ? neg : pos).push_back(i);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::vector<std::size_t> out(labels.size());
  std::size_t position = 0;
  for (const auto* group : {&neg, &pos})
    for (std::size_t i : *group) out[i] = position++ % folds;
  return out;
}

CellResult grid_search(const GridSearchInput& in) {
  const std::size_t n = in.samples.size();
  const std::size_t nc = in.c_grid.size(), ng = in.g_grid.size();
  const std::size_t repeats = in.fold_assignments.size();
  const std::size_t folds = in.folds;
  if (in.labels.size() != n)
    throw Error(ErrorCode::shape_mismatch, "grid search: sample and label counts differ");

  // Train/validation index lists per (repeat, fold).
  struct Split {
    std::vector<Eigen::Index> train, val;
    std::vector<int> train_labels;
  };
  std::vector<Split> splits(repeats * folds);
  for (std::size_t r = 0; r < repeats; ++r) {
    if (in.fold_assignments[r].size() != n)
      throw Error(ErrorCode::shape_mismatch, "grid search: fold assignment has wrong length");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < folds; ++f) {
        Split& s = splits[r * folds + f];
        if (in.fold_assignments[r][i] == f) {
          s.val.push_back(static_cast<Eigen::Index>(i));
        } else {
          s.train.push_back(static_cast<Eigen::Index>(i));
          s.train_labels.push_back(in.labels[i]);
        }
      }
    }
  }

  CellResult cell;
  cell.kernel = in.kind;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  // fold_acc[((g * nc + c) * repeats + r) * folds + f]
  std::vector<double> fold_acc(ng * nc * repeats * folds, nan);
  SmoOptions smo;
  smo.tol = in.smo_tol;
  for (std::size_t gi = 0; gi < ng; ++gi) {
    auto t0 = Clock::now();
    const GramMatrix gram = gram_matrix(in.samples, in.kind, in.g_grid[gi], in.threads);
    if (in.record_timing) cell.kernel_seconds += seconds_since(t0);

    t0 = Clock::now();
    parallel_for(nc * repeats * folds, in.threads, [&](std::size_t task) {
      const std::size_t ci = task / (repeats * folds);
      const Split& s = splits[task % (repeats * folds)];
      if (s.val.empty()) {
        fold_acc[gi * nc * repeats * folds + task] = 1.0;
        return;
      }
      const Matrix k_train = gram.values(s.train, s.train);
      try {
        const SvmModel model = train(s.train_labels, k_train, in.c_grid[ci], smo);
        std::size_t correct = 0;
        std::vector<double> column(s.train.size());
        for (Eigen::Index v : s.val) {
          for (std::size_t t = 0; t < s.train.size(); ++t) column[t] = gram.values(s.train[t], v);
          correct += predict(model, column) == in.labels[static_cast<std::size_t>(v)];
        }
        fold_acc[gi * nc * repeats * folds + task] =
            static_cast<double>(correct) / static_cast<double>(s.val.size());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::non_convergence) throw;
      }
    });
    if (in.record_timing) cell.train_seconds += seconds_since(t0);
  }

  // Per repeat: best fold-mean accuracy, ties to smaller C then smaller g.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> votes;
  for (std::size_t r = 0; r < repeats; ++r) {
    double best = -1.0;
    std::size_t best_c = 0, best_g = 0;
    for (std::size_t ci = 0; ci < nc; ++ci) {
      for (std::size_t gi = 0; gi < ng; ++gi) {
        double sum = 0.0;
        for (std::size_t f = 0; f < folds; ++f)
          sum += fold_acc[((gi * nc + ci) * repeats + r) * folds + f];
        const double acc = sum / static_cast<double>(folds);
        if (std::isnan(acc)) {
          ++cell.invalid_points;
          continue;
        }
        if (acc > best) {
          best = acc;
          best_c = ci;
          best_g = gi;
        }
      }
    }
    if (best < 0.0) {
      cell.valid = false;
      continue;
    }
    cell.repeat_accuracy.push_back(best);
    cell.selections.emplace_back(in.c_grid[best_c], in.g_grid[best_g]);
    ++votes[{best_c, best_g}];
  }

  if (!cell.valid || cell.repeat_accuracy.empty()) {
    cell.valid = false;
    cell.mean_acc = cell.std_acc = cell.ci95 = cell.C = cell.g = nan;
    return cell;
  }
  const double count = static_cast<double>(cell.repeat_accuracy.size());
  cell.mean_acc = std::accumulate(cell.repeat_accuracy.begin(), cell.repeat_accuracy.end(), 0.0) / count;
  double ss = 0.0;
  for (double a : cell.repeat_accuracy) ss += (a - cell.mean_acc) * (a - cell.mean_acc);
  cell.std_acc = cell.repeat_accuracy.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  cell.ci95 = 1.96 * cell.std_acc / std::sqrt(count);
  // Most frequent selection; map order breaks ties toward smaller C, then g.
  std::size_t most = 0;
  for (const auto& [key, v] : votes) {
    if (v > most) {
      most = v;
      cell.C = in.c_grid[key.first];
      cell.g = in.g_grid[key.second];
    }
  }
  return cell;
}

TuckerTensor decompose_tucker(const Sample& raw, std::size_t rank, double p) {
  const Shape ranks(sample_shape(raw).size(), rank);
  if (const auto* t = std::get_if<TuckerTensor>(&raw)) return weighted_hosvd(*t, ranks, p);
  return weighted_hosvd(to_dense(raw), ranks, p);
}

Sample prepare_sample(const Sample& raw, KernelKind kind, std::size_t rank, double p,
                      DuskSource dusk_source) {
  if (uses_tucker(kind, dusk_source)) {
    TuckerTensor t = decompose_tucker(raw, rank, p);
    if (kind == KernelKind::dusk) return tucker_to_cp(t);
    return t;
  }
  const DenseTensor dense = to_dense(raw);
  if (dusk_source == DuskSource::cp) return cp_als(dense, rank).cp;
  const Shape tt_ranks(dense.order() - 1, rank);
  return tt_to_cp(tt_svd(dense, tt_ranks));
}

CVReport run_experiment(const ExperimentConfig& cfg_in, std::size_t threads) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();
  threads = std::max<std::size_t>(threads, 1);

  struct Dataset {
    std::optional<double> noise;
    std::vector<Sample> raw;
    std::vector<int> labels;
  };
  std::vector<Dataset> datasets;
  if (cfg.source == DataSource::synthetic) {
    for (double nl : cfg.noise_levels) {
      SynthConfig s = cfg.synth;
      s.noise_variance = nl;
      Dataset d;
      d.noise = nl;
      for (auto& ls : generate(s)) {
        d.raw.emplace_back(std::move(ls.tensor));
        d.labels.push_back(ls.label);
      }
      datasets.push_back(std::move(d));
    }
  } else {
    TrainingSet ts = load_dataset(cfg.dataset_dir);
    datasets.push_back({std::nullopt, std::move(ts.samples), std::move(ts.labels)});
  }

  CVReport report;
  report.simd = std::string(simd::to_string(simd::active_isa()));
  for (const Dataset& d : datasets) {
    const std::size_t order = sample_shape(d.raw.front()).size();
    const double p = cfg.p ? *cfg.p : default_power(order);
    std::vector<std::vector<std::size_t>> assignments;
    for (std::size_t r = 0; r < cfg.repeats; ++r)
      assignments.push_back(stratified_folds(d.labels, cfg.folds, stream_seed(cfg.seed, kFoldStream, r)));

    for (std::size_t rank : cfg.ranks) {
      for (std::size_t m = 0; m < order; ++m)
        if (rank > sample_shape(d.raw.front())[m])
          throw Error(ErrorCode::rank_error, "rank " + std::to_string(rank) + " exceeds mode " +
                                                 std::to_string(m + 1) + " size");
      std::vector<TuckerTensor> tucker_cache;
      for (KernelKind kind : cfg.kernels) {
        std::vector<Sample> prepared(d.raw.size());
        if (uses_tucker(kind, cfg.dusk_source)) {
          if (tucker_cache.empty() || !cfg.cache_decompositions) {
            tucker_cache.assign(d.raw.size(), TuckerTensor{});
            parallel_for(d.raw.size(), threads, [&](std::size_t i) {
              tucker_cache[i] = decompose_tucker(d.raw[i], rank, p);
            });
          }
          parallel_for(d.raw.size(), threads, [&](std::size_t i) {
            if (kind == KernelKind::dusk)
              prepared[i] = tucker_to_cp(tucker_cache[i]);
            else
              prepared[i] = tucker_cache[i];
          });
        } else {
          parallel_for(d.raw.size(), threads, [&](std::size_t i) {
            prepared[i] = prepare_sample(d.raw[i], kind, rank, p, cfg.dusk_source);
          });
        }

        GridSearchInput in;
        in.samples = prepared;
        in.labels = d.labels;
        in.kind = kind;
        in.c_grid = cfg.c_grid;
        in.g_grid = cfg.g_grid;
        in.fold_assignments = assignments;
        in.folds = cfg.folds;
        in.smo_tol = cfg.smo_tol;
        in.threads = threads;
        in.record_timing = cfg.record_timing;
        CellResult cell = grid_search(in);
        cell.rank = rank;
        cell.noise = d.noise;
        report.rows.push_back(std::move(cell));
      }
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), row_less);
  return report;
}

TrainingSet load_dataset(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.csv";
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::io_error, manifest.string() + ": cannot open manifest");
  TrainingSet ts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::format_error, manifest.string() + ":" + std::to_string(lineno) +
                                               ": expected '<path>,<label>'");
    const std::string label_text = line.substr(comma + 1);
    int raw = 0;
    const auto res = std::from_chars(label_text.data(), label_text.data() + label_text.size(), raw);
    if (res.ec != std::errc{} || res.ptr != label_text.data() + label_text.size())
      throw Error(ErrorCode::format_error, manifest.string() + ":" + std::to_string(lineno) +
                                               ": unknown label '" + label_text + "'");
    int label = 0;
    try {
      label = normalize_label(raw);
    } catch (const Error&) {
      throw Error(ErrorCode::format_error, manifest.string() + ":" + std::to_string(lineno) +
                                               ": unknown label '" + label_text + "'");
    }
    DenseTensor t = read_tensor(dir / line.substr(0, comma));
    if (!ts.samples.empty() && sample_shape(ts.samples.front()) != t.shape())
      throw Error(ErrorCode::shape_mismatch, manifest.string() + ":" + std::to_string(lineno) +
                                                 ": tensor shape differs from the first sample");
    ts.samples.emplace_back(std::move(t));
    ts.labels.push_back(label);
  }
  if (ts.samples.empty()) throw Error(ErrorCode::format_error, manifest.string() + ": no samples");
  return ts;
}

void export_dataset(const std::filesystem::path& dir, std::span<const DenseTensor> tensors,
                    std::span<const int> labels) {
  if (tensors.size() != labels.size())
    throw Error(ErrorCode::shape_mismatch, "export: tensor and label counts differ");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, dir.string() + ": " + ec.message());
  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw Error(ErrorCode::io_error, (dir / "manifest.csv").string() + ": cannot write");
  const int width = static_cast<int>(std::to_string(tensors.size()).size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::string name = std::to_string(i + 1);
    name = "sample_" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(name.size()))), '0') +
           name + ".tnsr";
    write_tensor(dir / name, tensors[i]);
    manifest << name << ',' << labels[i] << '\n';
  }
  if (!manifest) throw Error(ErrorCode::io_error, (dir / "manifest.csv").string() + ": write failed");
}

std::string report_csv(const CVReport& report) {
  std::vector<const CellResult*> rows;
  for (const auto& r : report.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return row_less(*a, *b); });
  std::string out = "kernel,rank,noise,mean_acc,std,ci95,C,g,kernel_seconds,train_seconds\n";
  for (const CellResult* r : rows) {
    out += std::string(to_string(r->kernel)) + ',' + std::to_string(r->rank) + ',' +
           (r->noise ? format_number(*r->noise) : std::string()) + ',' + format_number(r->mean_acc) +
           ',' + format_number(r->std_acc) + ',' + format_number(r->ci95) + ',' +
           format_number(r->C) + ',' + format_number(r->g) + ',' +
           format_number(r->kernel_seconds) + ',' + format_number(r->train_seconds) + '\n';
  }
  return out;
}

std::string report_json(const CVReport& report) {
  auto num = [](double v) -> json { return std::isnan(v) ? json(nullptr) : json(v); };
  json rows = json::array();
  for (const auto& r : report.rows) {
    json sel = json::array();
    for (const auto& [c, g] : r.selections) sel.push_back({{"C", c}, {"g", g}});
    rows.push_back({{"kernel", to_string(r.kernel)},
                    {"rank", r.rank},
                    {"noise", r.noise ? json(*r.noise) : json(nullptr)},
                    {"mean_acc", num(r.mean_acc)},
                    {"std", num(r.std_acc)},
                    {"ci95", num(r.ci95)},
                    {"C", num(r.C)},
                    {"g", num(r.g)},
                    {"kernel_seconds", r.kernel_seconds},
                    {"train_seconds", r.train_seconds},
                    {"repeat_accuracy", r.repeat_accuracy},
                    {"selections", sel},
                    {"invalid_points", r.invalid_points},
                    {"valid", r.valid}});
  }
  return json{{"simd", report.simd}, {"rows", rows}}.dump(2) + "\n";
}

CVReport parse_report_json(const std::string& text) {
  CVReport report;
  try {
    const json j = json::parse(text);
    auto num = [](const json& v) {
      return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    report.simd = j.value("simd", "");
    for (const auto& r : j.at("rows")) {
      CellResult c;
      c.kernel = parse_kernel_kind(r.at("kernel").get<std::string>());
      c.rank = r.at("rank").get<std::size_t>();
      if (!r.at("noise").is_null()) c.noise = r.at("noise").get<double>();
      c.mean_acc = num(r.at("mean_acc"));
      c.std_acc = num(r.at("std"));
      c.ci95 = num(r.at("ci95"));
      c.C = num(r.at("C"));
      c.g = num(r.at("g"));
      c.kernel_seconds = r.at("kernel_seconds").get<double>();
      c.train_seconds = r.at("train_seconds").get<double>();
      c.repeat_accuracy = r.value("repeat_accuracy", std::vector<double>{});
      for (const auto& s : r.value("selections", json::array()))
        c.selections.emplace_back(s.at("C").get<double>(), s.at("g").get<double>());
      c.invalid_points = r.value("invalid_points", std::size_t{0});
      c.valid = r.value("valid", true);
      report.rows.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("summary JSON: ") + e.what());
  }
  return report;
}

void emit_report(const CVReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, dir.string() + ": " + ec.message());
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw Error(ErrorCode::io_error, path.string() + ": write failed");
  };
  write(dir / "report.csv", report_csv(report));
  write(dir / "summary.json", report_json(report));
}

}  // namespace stm
