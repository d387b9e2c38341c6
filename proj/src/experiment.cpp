#include "ope/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ope/trajectory_io.hpp"

namespace ope {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<double> ExperimentConfig::policy_alpha() const {
  if (!alpha.empty()) return alpha;
  if (scenario == "scenario1") return {0.0, -1.0, 0.0};
  return {-1.0, -1.0, 1.0};
}

ScenarioSpec ExperimentConfig::scenario_spec() const {
  ScenarioSpec spec = ScenarioSpec::by_name(scenario);
  spec.baseline_rate = baseline_rate;
  spec.state_noise_sd = state_noise_sd;
  spec.reward_noise_sd = reward_noise_sd;
  return spec;
}

PolicySpec ExperimentConfig::target_policy() const {
  const auto a = policy_alpha();
  if (a.size() < 3) throw std::invalid_argument("config: policy alpha needs d + 2 entries");
  std::vector<double> a1(a.begin() + 1, a.end() - 1);
  return PolicySpec::linear_deterministic(a.front(), std::move(a1), a.back());
}

namespace {

Method method_from_string(const std::string& s) {
  if (s == "naive") return Method::Naive;
  if (s == "standard") return Method::Standard;
  if (s == "modulated") return Method::Modulated;
  throw std::invalid_argument("config: unknown method '" + s + "'");
}

RewardMode mode_from_string(const std::string& s) {
  if (s == "cumulative") return RewardMode::Cumulative;
  if (s == "integrated") return RewardMode::Integrated;
  throw std::invalid_argument("config: unknown reward mode '" + s + "'");
}

json reference_to_json(const ReferenceDistribution& g) {
  json j;
  if (g.kind == ReferenceDistribution::Kind::UniformBox) {
    j["kind"] = "uniform-box";
    j["s_lo"] = g.s_lo;
    j["s_hi"] = g.s_hi;
    j["x_lo"] = g.x_lo;
    j["x_hi"] = g.x_hi;
  } else {
    j["kind"] = "point-mass";
    j["s"] = g.atom_s;
    j["x"] = g.atom_x;
  }
  return j;
}

ReferenceDistribution reference_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform-box") {
    return ReferenceDistribution::uniform_box(j.at("s_lo").get<std::vector<double>>(),
                                              j.at("s_hi").get<std::vector<double>>(),
                                              j.at("x_lo").get<double>(),
                                              j.at("x_hi").get<double>());
  }
  if (kind == "point-mass")
    return ReferenceDistribution::point_mass(j.at("s").get<std::vector<double>>(),
                                             j.at("x").get<double>());
  throw std::invalid_argument("config: unknown reference kind '" + kind + "'");
}

uint64_t combine_seed(uint64_t base, uint64_t index) {
  uint64_t x = base ^ (0x9e3779b97f4a7c15ULL * (index + 0x51ULL));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  if (j.contains("scenario")) c.scenario = j["scenario"].get<std::string>();
  if (j.contains("scenario_params")) {
    const auto& p = j["scenario_params"];
    if (p.contains("baseline_rate")) c.baseline_rate = p["baseline_rate"].get<double>();
    if (p.contains("state_noise_sd")) c.state_noise_sd = p["state_noise_sd"].get<double>();
    if (p.contains("reward_noise_sd")) c.reward_noise_sd = p["reward_noise_sd"].get<double>();
  }
  if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
  if (j.contains("policy") && j["policy"].contains("alpha"))
    c.alpha = j["policy"]["alpha"].get<std::vector<double>>();
  if (j.contains("grid")) {
    c.grid.clear();
    for (const auto& cell : j["grid"])
      c.grid.emplace_back(cell.at("n").get<int>(), cell.at("K").get<int>());
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& s : j["methods"]) c.methods.push_back(method_from_string(s.get<std::string>()));
  }
  if (j.contains("reward_modes")) {
    c.reward_modes.clear();
    for (const auto& s : j["reward_modes"])
      c.reward_modes.push_back(mode_from_string(s.get<std::string>()));
  }
  if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("basis")) {
    const auto& b = j["basis"];
    if (b.contains("degree")) c.basis.degree = b["degree"].get<int>();
    if (b.contains("q_state")) c.basis.q_state = b["q_state"].get<int>();
    if (b.contains("q_gap")) c.basis.q_gap = b["q_gap"].get<int>();
  }
  if (j.contains("renewal")) {
    const auto& r = j["renewal"];
    if (r.contains("tau_quantile")) c.renewal.tau_quantile = r["tau_quantile"].get<double>();
    if (r.contains("tau")) c.renewal.tau = r["tau"].get<double>();
    if (r.contains("bandwidth_scale")) c.renewal.bandwidth_scale = r["bandwidth_scale"].get<double>();
    if (r.contains("bandwidth")) c.renewal.bandwidth = r["bandwidth"].get<double>();
    if (r.contains("scheme")) c.scheme = r["scheme"].get<int>();
    if (r.contains("bounded_gap_covariate"))
      c.bounded_gap_covariate = r["bounded_gap_covariate"].get<bool>();
  }
  if (j.contains("references")) {
    const auto& r = j["references"];
    if (r.contains("cumulative")) c.ref_cumulative = reference_from_json(r["cumulative"]);
    if (r.contains("integrated")) c.ref_integrated = reference_from_json(r["integrated"]);
  }
  if (j.contains("truth")) {
    const auto& t = j["truth"];
    if (t.contains("N")) c.truth_N = t["N"].get<long>();
    if (t.contains("tail_tol")) c.tail_tol = t["tail_tol"].get<double>();
    if (t.contains("seed")) c.truth_seed = t["seed"].get<uint64_t>();
  }
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  if (j.contains("threads")) c.threads = j["threads"].get<int>();
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["scenario"] = scenario;
  j["scenario_params"] = {{"baseline_rate", baseline_rate},
                          {"state_noise_sd", state_noise_sd},
                          {"reward_noise_sd", reward_noise_sd}};
  j["gamma"] = gamma;
  j["policy"]["alpha"] = policy_alpha();
  j["grid"] = json::array();
  for (const auto& [n, K] : grid) j["grid"].push_back({{"n", n}, {"K", K}});
  j["methods"] = json::array();
  for (auto m : methods) j["methods"].push_back(to_string(m));
  j["reward_modes"] = json::array();
  for (auto m : reward_modes) j["reward_modes"].push_back(to_string(m));
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["basis"] = {{"degree", basis.degree}, {"q_state", basis.q_state}, {"q_gap", basis.q_gap}};
  j["renewal"] = {{"tau_quantile", renewal.tau_quantile},
                  {"tau", renewal.tau},
                  {"bandwidth_scale", renewal.bandwidth_scale},
                  {"bandwidth", renewal.bandwidth},
                  {"scheme", scheme},
                  {"bounded_gap_covariate", bounded_gap_covariate}};
  j["references"] = {{"cumulative", reference_to_json(ref_cumulative)},
                     {"integrated", reference_to_json(ref_integrated)}};
  j["truth"] = {{"N", truth_N}, {"tail_tol", tail_tol}, {"seed", truth_seed}};
  j["out"] = out_dir;
  j["threads"] = threads;
  return j.dump(2) + "\n";
}

namespace {

json truth_cache_key(const ExperimentConfig& c, RewardMode mode) {
  json key;
  key["scenario"] = c.scenario;
  key["scenario_params"] = {{"baseline_rate", c.baseline_rate},
                            {"state_noise_sd", c.state_noise_sd},
                            {"reward_noise_sd", c.reward_noise_sd}};
  key["alpha"] = c.policy_alpha();
  key["reference"] = reference_to_json(c.reference(mode));
  key["gamma"] = c.gamma;
  key["N"] = c.truth_N;
  key["seed"] = c.truth_seed;
  key["tail_tol"] = c.tail_tol;
  key["reward_mode"] = to_string(mode);
  return key;
}

}  // namespace

std::map<RewardMode, TruthEstimate> run_truth(const ExperimentConfig& config, bool write_files) {
  const fs::path dir(config.out_dir);
  const fs::path cache = dir / "truth.json";
  json existing;
  if (fs::exists(cache)) {
    std::ifstream is(cache);
    try {
      is >> existing;
    } catch (...) {
      existing = json::object();
    }
  }

  const ScenarioSpec spec = config.scenario_spec();
  const PolicySpec policy = config.target_policy();

  std::map<RewardMode, TruthEstimate> out;
  json emitted = json::object();
  for (RewardMode mode : {RewardMode::Cumulative, RewardMode::Integrated}) {
    const json key = truth_cache_key(config, mode);
    const std::string tag = to_string(mode);
    TruthEstimate est;
    if (existing.contains(tag) && existing[tag].contains("key") && existing[tag]["key"] == key) {
      est.value = existing[tag]["value"].get<double>();
      est.mc_standard_error = existing[tag]["mc_se"].get<double>();
      est.N = existing[tag]["N"].get<long>();
      est.reward_mode = mode;
    } else {
      est = monte_carlo_truth(spec, policy, config.reference(mode), config.gamma, config.truth_N,
                              config.tail_tol, config.truth_seed, mode);
    }
    out[mode] = est;
    emitted[tag] = {{"value", est.value},
                    {"mc_se", est.mc_standard_error},
                    {"N", est.N},
                    {"key", key}};
  }
  if (write_files) {
    fs::create_directories(dir);
    std::ofstream os(cache);
    os << emitted.dump(2) << "\n";
  }
  return out;
}

namespace {

const char* kReplicateHeader =
    "scenario,n,K,replicate,method,reward_mode,value,se,ci_lo,ci_hi,covered,n_K,design_cond,"
    "newton_iters,floored_weights,status,message";

const char* kSummaryHeader =
    "scenario,n,K,reward_mode,truth,replicates,Bias_N,SD_N,used_N,Bias_S,SD_S,SE_S,CP_S,used_S,"
    "Bias_M,SD_M,SE_M,CP_M,used_M";

std::string csv_cell(double v) { return std::isnan(v) ? "NA" : format_double(v); }

// Per-replicate evaluation with graceful degradation: if the full request set
// fails (renewal fitting is the usual culprit), the requests that need no
// renewal model are retried so the replicate still contributes to them.
std::vector<ReplicateRecord> run_replicate(const ExperimentConfig& config, int n, int K, int rep,
                                           const std::map<RewardMode, TruthEstimate>& truths) {
  const ScenarioSpec spec = config.scenario_spec();
  const PolicySpec behavior = PolicySpec::uniform(2);
  const PolicySpec target = config.target_policy();
  const Dataset data = gen_dataset(spec, n, K, behavior, combine_seed(config.seed, rep));

  std::vector<MethodRequest> requests;
  for (Method m : config.methods)
    for (RewardMode mode : config.reward_modes) requests.push_back({m, mode});

  EvalOptions opts;
  opts.basis = config.basis;
  opts.renewal = config.renewal;
  opts.scheme = config.scheme;
  opts.bounded_gap_covariate = config.bounded_gap_covariate;
  opts.weight_floor = config.weight_floor;
  opts.quadrature_nodes = config.quadrature_nodes;

  std::map<RewardMode, ReferenceDistribution> refs;
  for (RewardMode mode : config.reward_modes) refs.emplace(mode, config.reference(mode));

  auto record_for = [&](const MethodRequest& req) {
    ReplicateRecord rec;
    rec.replicate = rep;
    rec.n = n;
    rec.K = K;
    rec.method = req.method;
    rec.mode = req.mode;
    return rec;
  };

  std::vector<ReplicateRecord> records;
  auto append_results = [&](const DatasetEvaluation& eval,
                            const std::vector<MethodRequest>& reqs) {
    for (size_t i = 0; i < reqs.size(); ++i) {
      ReplicateRecord rec = record_for(reqs[i]);
      const EvalResult& res = eval.results[i];
      rec.ok = true;
      rec.value = res.estimate.value;
      rec.has_se = res.estimate.has_se;
      rec.se = res.estimate.se;
      rec.ci_lo = res.estimate.ci_lo;
      rec.ci_hi = res.estimate.ci_hi;
      rec.n_K = eval.n_K;
      rec.design_cond = res.design_cond;
      rec.newton_iters = eval.newton_iterations;
      rec.floored_weights = eval.floored_weights;
      const double truth = truths.at(reqs[i].mode).value;
      rec.covered = rec.has_se && rec.ci_lo <= truth && truth <= rec.ci_hi;
      records.push_back(std::move(rec));
    }
  };

  try {
    append_results(evaluate_dataset(data, target, config.gamma, refs, requests, opts), requests);
    return records;
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    // retry the renewal-free subset
    std::vector<MethodRequest> plain;
    for (const auto& req : requests)
      if (req.method != Method::Modulated && req.mode == RewardMode::Cumulative) plain.push_back(req);
    std::vector<ReplicateRecord> failures;
    for (const auto& req : requests) {
      const bool retried = req.method != Method::Modulated && req.mode == RewardMode::Cumulative;
      if (!retried) {
        ReplicateRecord rec = record_for(req);
        rec.ok = false;
        rec.message = msg;
        failures.push_back(std::move(rec));
      }
    }
    records.clear();
    try {
      if (!plain.empty())
        append_results(evaluate_dataset(data, target, config.gamma, refs, plain, opts), plain);
    } catch (const std::exception& e2) {
      records.clear();
      for (const auto& req : plain) {
        ReplicateRecord rec = record_for(req);
        rec.ok = false;
        rec.message = e2.what();
        records.push_back(std::move(rec));
      }
    }
    records.insert(records.end(), failures.begin(), failures.end());
    return records;
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files) {
  ExperimentResult result;
  result.truths = run_truth(config, write_files);

  const int nthreads =
      config.threads > 0 ? config.threads
                         : std::max(1u, std::thread::hardware_concurrency());

  for (const auto& [n, K] : config.grid) {
    std::vector<std::vector<ReplicateRecord>> slots(config.replicates);
    std::atomic<int> next{0};
    auto worker = [&]() {
      while (true) {
        const int rep = next.fetch_add(1);
        if (rep >= config.replicates) break;
        slots[rep] = run_replicate(config, n, K, rep, result.truths);
      }
    };
    if (nthreads <= 1 || config.replicates <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    for (auto& rows : slots)
      result.records.insert(result.records.end(), rows.begin(), rows.end());

    // summaries per (reward mode, method)
    for (RewardMode mode : config.reward_modes) {
      for (Method method : config.methods) {
        MethodSummary s;
        s.n = n;
        s.K = K;
        s.method = method;
        s.mode = mode;
        s.truth = result.truths.at(mode).value;
        std::vector<double> values, ses;
        int covered = 0, with_se = 0;
        for (const auto& rec : result.records) {
          if (rec.n != n || rec.K != K || rec.method != method || rec.mode != mode) continue;
          if (!rec.ok) {
            ++s.excluded;
            continue;
          }
          values.push_back(rec.value);
          if (rec.has_se) {
            ++with_se;
            ses.push_back(rec.se);
            if (rec.covered) ++covered;
          }
        }
        s.used = static_cast<int>(values.size());
        if (s.used > 0) {
          double mean = 0.0;
          for (double v : values) mean += v;
          mean /= s.used;
          s.bias = mean - s.truth;
          if (s.used > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - mean) * (v - mean);
            s.sd = std::sqrt(ss / (s.used - 1));
          } else {
            s.sd = std::numeric_limits<double>::quiet_NaN();
          }
        }
        s.has_se = with_se > 0;
        if (with_se > 0) {
          double acc = 0.0;
          for (double v : ses) acc += v;
          s.mean_se = acc / with_se;
          s.cp = static_cast<double>(covered) / with_se;
        }
        result.summaries.push_back(std::move(s));
      }
    }
  }

  if (write_files) {
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    {
      std::ofstream os(dir / "config.json");
      os << config.to_json_text();
    }
    {
      std::ofstream os(dir / "replicates.csv");
      os << kReplicateHeader << "\n";
      for (const auto& rec : result.records) {
        os << config.scenario << "," << rec.n << "," << rec.K << "," << rec.replicate << ","
           << to_string(rec.method) << "," << to_string(rec.mode) << ",";
        if (rec.ok) {
          os << format_double(rec.value) << ",";
          if (rec.has_se)
            os << format_double(rec.se) << "," << format_double(rec.ci_lo) << ","
               << format_double(rec.ci_hi) << "," << (rec.covered ? 1 : 0) << ",";
          else
            os << "NA,NA,NA,NA,";
          os << rec.n_K << "," << format_double(rec.design_cond) << "," << rec.newton_iters << ","
             << rec.floored_weights << ",ok,";
        } else {
          os << "NA,NA,NA,NA,NA,NA,NA,NA,NA,failed," << rec.message;
        }
        os << "\n";
      }
    }
    {
      std::ofstream os(dir / "summary.csv");
      os << kSummaryHeader << "\n";
      for (const auto& [n, K] : config.grid) {
        for (RewardMode mode : config.reward_modes) {
          auto find = [&](Method m) -> const MethodSummary* {
            for (const auto& s : result.summaries)
              if (s.n == n && s.K == K && s.mode == mode && s.method == m) return &s;
            return nullptr;
          };
          const MethodSummary* naive = find(Method::Naive);
          const MethodSummary* std_ = find(Method::Standard);
          const MethodSummary* mod = find(Method::Modulated);
          os << config.scenario << "," << n << "," << K << "," << to_string(mode) << ","
             << format_double(result.truths.at(mode).value) << "," << config.replicates << ",";
          auto bias_sd = [&](const MethodSummary* s) {
            if (!s || s->used == 0) return std::string("NA,NA,0");
            return csv_cell(s->bias) + "," + csv_cell(s->sd) + "," + std::to_string(s->used);
          };
          auto full = [&](const MethodSummary* s) {
            if (!s || s->used == 0) return std::string("NA,NA,NA,NA,0");
            return csv_cell(s->bias) + "," + csv_cell(s->sd) + "," +
                   (s->has_se ? csv_cell(s->mean_se) : "NA") + "," +
                   (s->has_se ? csv_cell(s->cp) : "NA") + "," + std::to_string(s->used);
          };
          os << bias_sd(naive) << "," << full(std_) << "," << full(mod) << "\n";
        }
      }
    }
  }
  return result;
}

std::string qmodel_to_json(const QFit& fit, const FeatureMap& map) {
  json j;
  j["method"] = to_string(fit.method);
  j["reward_mode"] = to_string(fit.mode);
  j["m"] = map.m();
  j["theta"] = std::vector<double>(fit.theta.data(), fit.theta.data() + fit.theta.size());
  json margins = json::array();
  for (int d = 0; d < map.d(); ++d) {
    const auto& b = map.state_margin(d);
    margins.push_back({{"degree", b.degree()}, {"knots", b.knots()}});
  }
  j["state_margins"] = margins;
  j["gap_margin"] = {{"degree", map.gap_margin().degree()},
                     {"knots", map.gap_margin().knots()}};
  return j.dump(2) + "\n";
}

namespace {
BsplineBasis basis_from_json(const json& j) {
  const int degree = j.at("degree").get<int>();
  const auto knots = j.at("knots").get<std::vector<double>>();
  // strip the clamped boundary knots; the constructor re-adds them
  std::vector<double> interior(knots.begin() + degree + 1, knots.end() - degree - 1);
  return BsplineBasis(degree, interior);
}
}  // namespace

std::pair<QFit, FeatureMap> qmodel_from_json(const std::string& text) {
  const json j = json::parse(text);
  std::vector<BsplineBasis> margins;
  for (const auto& mj : j.at("state_margins")) margins.push_back(basis_from_json(mj));
  FeatureMap map = FeatureMap::from_margins(std::move(margins),
                                            basis_from_json(j.at("gap_margin")),
                                            j.at("m").get<int>());
  QFit fit;
  const auto theta = j.at("theta").get<std::vector<double>>();
  fit.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());
  fit.method = method_from_string(j.at("method").get<std::string>());
  fit.mode = mode_from_string(j.at("reward_mode").get<std::string>());
  return {std::move(fit), std::move(map)};
}

void report(const std::vector<std::string>& summary_files, const std::string& out_dir) {
  if (summary_files.empty()) throw std::invalid_argument("report: no summary files given");
  std::vector<std::string> rows;
  std::string header;
  for (const auto& path : summary_files) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("report: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("report: empty file " + path);
    if (header.empty())
      header = line;
    else if (line != header)
      throw std::runtime_error("report: schema mismatch in " + path);
    while (std::getline(is, line))
      if (!line.empty()) rows.push_back(line);
  }
  // conventional layout: scenario, reward mode, the K = 10 block before the
  // n = fixed block, ascending within each
  auto key = [](const std::string& row) {
    std::stringstream ss(row);
    std::string scenario, n, K, mode;
    std::getline(ss, scenario, ',');
    std::getline(ss, n, ',');
    std::getline(ss, K, ',');
    std::getline(ss, mode, ',');
    const int ni = std::stoi(n), Ki = std::stoi(K);
    const int block = Ki <= ni ? 0 : 1;
    return std::make_tuple(scenario, mode, block, Ki <= ni ? Ki : ni, ni + Ki);
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const std::string& a, const std::string& b) { return key(a) < key(b); });
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "merged.csv");
    os << header << "\n";
    for (const auto& r : rows) os << r << "\n";
  }
  {
    // long format: one (statistic, method) value per row
    std::ofstream os(fs::path(out_dir) / "long.csv");
    os << "scenario,n,K,reward_mode,method,stat,value\n";
    std::vector<std::string> cols;
    {
      std::stringstream ss(header);
      std::string c;
      while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    for (const auto& r : rows) {
      std::vector<std::string> cells;
      std::stringstream ss(r);
      std::string c;
      while (std::getline(ss, c, ',')) cells.push_back(c);
      for (size_t i = 6; i < cells.size() && i < cols.size(); ++i) {
        const std::string& name = cols[i];
        const auto us = name.find('_');
        if (us == std::string::npos) continue;
        const std::string stat = name.substr(0, us);
        const std::string suffix = name.substr(us + 1);
        std::string method = suffix == "N" ? "naive" : suffix == "S" ? "standard" : "modulated";
        if (stat == "used") continue;
        os << cells[0] << "," << cells[1] << "," << cells[2] << "," << cells[3] << "," << method
           << "," << stat << "," << cells[i] << "\n";
      }
    }
  }
}

}  // namespace ope
