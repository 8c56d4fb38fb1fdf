// Copyright 2026 The bidiopt Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "bidiopt/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace bidiopt {

std::string to_string(ProblemKind kind) {
  return kind == ProblemKind::kQuadratic ? "quadratic" : "logistic";
}
std::string to_string(ParamMode mode) {
  return mode == ParamMode::kTheory ? "theory" : "tuned";
}
std::string to_string(SelectRule rule) {
  return rule == SelectRule::kRealistic ? "realistic" : "optimistic";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "quadratic") return ProblemKind::kQuadratic;
  if (name == "logistic") return ProblemKind::kLogistic;
  throw Error("unknown problem '" + std::string(name) + "' (expected quadratic or logistic)");
}
ParamMode parse_param_mode(std::string_view name) {
  if (name == "theory") return ParamMode::kTheory;
  if (name == "tuned") return ParamMode::kTuned;
  throw Error("unknown mode '" + std::string(name) + "' (expected theory or tuned)");
}
SelectRule parse_select_rule(std::string_view name) {
  if (name == "realistic") return SelectRule::kRealistic;
  if (name == "optimistic") return SelectRule::kOptimistic;
  throw Error("unknown parameter rule '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid config: " + what); };
  if (n == 0) fail("n must be positive");
  if (!(r >= 0.0 && r <= 1.0)) fail("r must lie in [0, 1]");
  if (grid_lo > grid_hi) fail("grid-lo exceeds grid-hi");
  if (grid_lo < -20 || grid_hi > 20) fail("grid exponents must lie in [-20, 20]");
  if (rounds == 0) fail("rounds must be positive");
  if (!(budget_coords >= 0.0)) fail("budget-coords must be non-negative");
  if (!(eps >= 0.0)) fail("eps must be non-negative");
  if (problem == ProblemKind::kLogistic && dataset.empty())
    fail("logistic problems need --dataset");
  if (problem == ProblemKind::kQuadratic) {
    if (dim == 0) fail("dim must be positive");
    if (!(L > 0.0) || !(mu >= 0.0) || mu > L) fail("quadratic needs 0 <= mu <= L, L > 0");
  }
  if (!(l2 >= 0.0)) fail("l2 must be non-negative");
  if (gamma && !(*gamma > 0.0)) fail("gamma must be positive");
  if (!(theory_constant > 0.0)) fail("theory constant must be positive");
}

std::vector<int> ExperimentConfig::exponents() const {
  std::vector<int> out;
  for (int i = grid_lo; i <= grid_hi; ++i) out.push_back(i);
  return out;
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "algo=" << to_string(c.algo) << '\n'
      << "problem=" << to_string(c.problem) << '\n'
      << "dataset=" << c.dataset << '\n'
      << "partition=" << to_string(c.partition) << '\n'
      << "n=" << c.n << '\n'
      << "kw=" << c.kw << '\n'
      << "ka=" << c.ka << '\n'
      << "r=" << format_double(c.r) << '\n'
      << "mode=" << to_string(c.mode) << '\n'
      << "grid_lo=" << c.grid_lo << '\n'
      << "grid_hi=" << c.grid_hi << '\n'
      << "rounds=" << c.rounds << '\n'
      << "budget_coords=" << format_double(c.budget_coords) << '\n'
      << "eps=" << format_double(c.eps) << '\n'
      << "seed=" << c.seed << '\n'
      << "out=" << c.out << '\n'
      << "dim=" << c.dim << '\n'
      << "mu=" << format_double(c.mu) << '\n'
      << "L=" << format_double(c.L) << '\n'
      << "l2=" << format_double(c.l2) << '\n'
      << "gamma=" << (c.gamma ? format_double(*c.gamma) : std::string()) << '\n'
      << "select=" << to_string(c.select) << '\n'
      << "theory_constant=" << format_double(c.theory_constant) << '\n'
      << "fstar_cache=" << c.fstar_cache << '\n';
  return out.str();
}

namespace {

template <class T>
T parse_number(std::string_view v, std::size_t line) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ParseError("bad number '" + std::string(v) + "'", line);
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    const auto key = line.substr(0, eq);
    const auto v = line.substr(eq + 1);
    if (key.starts_with("result.")) continue;
    try {
      if (key == "algo") c.algo = parse_algorithm(v);
      else if (key == "problem") c.problem = parse_problem_kind(v);
      else if (key == "dataset") c.dataset = v;
      else if (key == "partition") c.partition = parse_partition_scheme(v);
      else if (key == "n") c.n = parse_number<std::size_t>(v, line_no);
      else if (key == "kw") c.kw = parse_number<std::size_t>(v, line_no);
      else if (key == "ka") c.ka = parse_number<std::size_t>(v, line_no);
      else if (key == "r") c.r = parse_number<double>(v, line_no);
      else if (key == "mode") c.mode = parse_param_mode(v);
      else if (key == "grid_lo") c.grid_lo = parse_number<int>(v, line_no);
      else if (key == "grid_hi") c.grid_hi = parse_number<int>(v, line_no);
      else if (key == "rounds") c.rounds = parse_number<std::size_t>(v, line_no);
      else if (key == "budget_coords") c.budget_coords = parse_number<double>(v, line_no);
      else if (key == "eps") c.eps = parse_number<double>(v, line_no);
      else if (key == "seed") c.seed = parse_number<std::uint64_t>(v, line_no);
      else if (key == "out") c.out = v;
      else if (key == "dim") c.dim = parse_number<std::size_t>(v, line_no);
      else if (key == "mu") c.mu = parse_number<double>(v, line_no);
      else if (key == "L") c.L = parse_number<double>(v, line_no);
      else if (key == "l2") c.l2 = parse_number<double>(v, line_no);
      else if (key == "gamma") {
        if (v.empty()) c.gamma.reset();
        else c.gamma = parse_number<double>(v, line_no);
      } else if (key == "select") c.select = parse_select_rule(v);
      else if (key == "theory_constant") c.theory_constant = parse_number<double>(v, line_no);
      else if (key == "fstar_cache") c.fstar_cache = v;
      else throw ParseError("unknown key '" + std::string(key) + "'", line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return c;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  Fnv1a h;
  h.update(serialize(config));
  return h.digest();
}

DistributedProblem build_problem(const ExperimentConfig& config, const ExecConfig& exec) {
  config.validate();
  if (config.problem == ProblemKind::kQuadratic)
    return make_quadratic(QuadraticSpec{config.dim, config.n, config.mu, config.L, config.seed});

  const Dataset data = load_libsvm(config.dataset);
  DistributedProblem problem = make_logistic(data, config.n, config.partition, config.l2);
  Fnv1a key;
  key.update_pod(dataset_hash(data));
  key.update_pod(static_cast<std::uint64_t>(config.n));
  key.update(to_string(config.partition));
  key.update_pod(config.l2);
  std::optional<double> f_star;
  if (!config.fstar_cache.empty()) f_star = FStarCache(config.fstar_cache).lookup(key.digest());
  if (!f_star) {
    const ReferenceSolution ref = solve_reference(problem, 1e-12, 2000000, exec);
    f_star = ref.f_star;
    if (!config.fstar_cache.empty()) FStarCache(config.fstar_cache).store(key.digest(), *f_star);
  }
  problem.set_optimum(*f_star);
  return problem;
}

namespace {
std::size_t default_density(std::size_t requested, std::size_t d) {
  const std::size_t k = requested ? requested : (d + 2) / 3;
  if (k < 1 || k > d)
    throw Error("compressor density " + std::to_string(k) + " outside [1, " +
                std::to_string(d) + "]");
  return k;
}
}  // namespace

ResolvedParams resolve_params(const ExperimentConfig& config,
                              const DistributedProblem& problem) {
  const std::size_t d = problem.dim();
  ResolvedParams out;
  out.kw = default_density(config.kw, d);
  out.ka = default_density(config.ka, d);
  const double dd = static_cast<double>(d);
  out.omega = dd / static_cast<double>(out.kw) - 1.0;
  out.beta = 1.0 / (out.omega + 1.0);
  // ADIANA sends u uncompressed: its downlink density is d and alpha is 1.
  const bool adiana = config.algo == Algorithm::kAdiana;
  out.alpha = adiana ? 1.0 : static_cast<double>(out.ka) / dd;
  const double ka = adiana ? dd : static_cast<double>(out.ka);
  const double kw = static_cast<double>(out.kw);
  const auto& c = problem.constants();
  if (config.select == SelectRule::kRealistic)
    out.choice = select_params_realistic(out.omega, kw, ka, dd, config.r);
  else
    out.choice = select_params_optimistic(out.omega, kw, ka, dd, config.r, c.L, c.L_max,
                                          problem.workers(), out.alpha);
  return out;
}

std::unique_ptr<Method> make_method(const ExperimentConfig& config,
                                    const DistributedProblem& problem,
                                    const ResolvedParams& params,
                                    std::optional<int> exponent, const ExecConfig& exec) {
  const auto& c = problem.constants();
  const std::size_t d = problem.dim();
  const double scale = exponent ? std::ldexp(1.0, *exponent) : 1.0;
  CommonOptions common;
  common.seed = config.seed;
  common.r = config.r;
  common.exec = exec;

  auto schedule_for = [&](double alpha) {
    ScheduleParams s;
    s.mu = c.mu;
    s.p = params.choice.p;
    s.tau = params.choice.tau;
    s.alpha = alpha;
    s.beta = params.beta;
    if (exponent) {
      s.lbar = scale * c.L;
    } else {
      const LbarInputs in{c.L, c.L_max, params.omega, alpha, s.tau, s.p, s.beta,
                          problem.workers()};
      s.lbar = lbar_theory(in, config.theory_constant);
    }
    s.lbar = std::max(s.lbar, s.mu);
    s.gamma0 = s.mu > 0.0 ? gamma0_strongly_convex(s.lbar, s.mu)
                          : gamma0_general_convex(s.lbar, c.L);
    return s;
  };

  switch (config.algo) {
    case Algorithm::kTwoDirection: {
      TwoDirectionOptions o;
      o.common = common;
      o.dual = CompressorSpec::rand_k(d, params.kw);
      o.primal = CompressorSpec::top_k(d, params.ka);
      o.schedule = schedule_for(params.alpha);
      return std::make_unique<TwoDirection>(problem, std::move(o));
    }
    case Algorithm::kAdiana: {
      AdianaOptions o;
      o.common = common;
      o.dual = CompressorSpec::rand_k(d, params.kw);
      o.schedule = schedule_for(1.0);
      return std::make_unique<Adiana>(problem, std::move(o));
    }
    case Algorithm::kEf21pDiana: {
      Ef21pDianaOptions o;
      o.common = common;
      o.dual = CompressorSpec::rand_k(d, params.kw);
      o.primal = CompressorSpec::top_k(d, params.ka);
      if (exponent) {
        o.gamma = scale / c.L;
      } else if (config.gamma) {
        o.gamma = *config.gamma;
      } else {
        throw Error("ef21p_diana in theory mode needs an explicit --gamma");
      }
      return std::make_unique<Ef21pDiana>(problem, std::move(o));
    }
    case Algorithm::kGd:
      return std::make_unique<GradientDescent>(problem, common,
                                               exponent ? scale / c.L
                                                        : config.gamma.value_or(1.0 / c.L));
    case Algorithm::kAgd: {
      const double L_eff = c.L / scale;
      return std::make_unique<AcceleratedGradient>(problem, common, L_eff,
                                                   std::min(c.mu, L_eff));
    }
  }
  throw Error("unsupported algorithm");
}

std::optional<double> coords_to_eps(const Trace& trace, double eps) {
  for (const auto& row : trace.rows)
    if (row.f_gap <= eps) return row.total_r;
  return std::nullopt;
}

std::optional<std::size_t> best_of(const std::vector<Trace>& traces, double eps) {
  if (traces.empty()) throw Error("best_of needs at least one trace");
  std::optional<std::size_t> best;
  std::optional<double> best_cost;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto cost = coords_to_eps(traces[i], eps);
    if (!cost) continue;
    bool better = !best_cost || *cost < *best_cost;
    if (best_cost && *cost == *best_cost)
      better = traces[i].grid_exponent.value_or(0) < traces[*best].grid_exponent.value_or(0);
    if (better) {
      best = i;
      best_cost = cost;
    }
  }
  return best;
}

namespace {

std::string fixed2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

constexpr double kGapFloor = 1e-16;

}  // namespace

std::string render_svg(const std::vector<Trace>& traces, std::vector<std::string>* skipped) {
  if (traces.empty()) throw Error("nothing to plot");
  struct Series {
    const Trace* trace;
    std::vector<std::pair<double, double>> pts;  // (total_r, log10 gap)
  };
  std::vector<Series> series;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& t : traces) {
    Series s{&t, {}};
    for (const auto& row : t.rows) {
      if (std::isnan(row.f_gap) || std::isinf(row.f_gap) || !std::isfinite(row.total_r))
        continue;
      const double y = std::log10(std::max(row.f_gap, kGapFloor));
      s.pts.emplace_back(row.total_r, y);
      x_lo = std::min(x_lo, row.total_r);
      x_hi = std::max(x_hi, row.total_r);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
    if (s.pts.empty()) {
      if (skipped) skipped->push_back(t.label);
      continue;
    }
    series.push_back(std::move(s));
  }
  if (series.empty()) {
    x_lo = 0.0;
    x_hi = 1.0;
    y_lo = -1.0;
    y_hi = 0.0;
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  y_lo = std::floor(y_lo);
  y_hi = std::ceil(y_hi);
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;

  const double width = 720, height = 440, left = 70, right = 200, top = 20, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n"
      << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = y_lo; e <= y_hi; e += 1.0) {
    out << "<text x=\"" << fixed2(left - 6) << "\" y=\"" << fixed2(py(e) + 4)
        << "\" font-size=\"10\" text-anchor=\"end\">1e" << static_cast<int>(e) << "</text>\n";
  }
  out << "<text x=\"" << fixed2(left) << "\" y=\"" << fixed2(height - bottom + 16)
      << "\" font-size=\"10\">" << format_double(x_lo) << "</text>\n"
      << "<text x=\"" << fixed2(left + pw) << "\" y=\"" << fixed2(height - bottom + 16)
      << "\" font-size=\"10\" text-anchor=\"end\">" << format_double(x_hi) << "</text>\n"
      << "<text x=\"" << fixed2(left + pw / 2) << "\" y=\"" << fixed2(height - 10)
      << "\" font-size=\"12\" text-anchor=\"middle\">coordinates (total_r)</text>\n"
      << "<text x=\"14\" y=\"" << fixed2(top + ph / 2)
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << fixed2(top + ph / 2) << ")\">f(x) - f*</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = palette[k % std::size(palette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t j = 0; j < series[k].pts.size(); ++j) {
      if (j) out << ' ';
      out << fixed2(px(series[k].pts[j].first)) << ',' << fixed2(py(series[k].pts[j].second));
    }
    out << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(k + 1);
    out << "<text x=\"" << fixed2(left + pw + 10) << "\" y=\"" << fixed2(ly)
        << "\" font-size=\"11\" fill=\"" << color << "\">"
        << xml_escape(series[k].trace->label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExecConfig& exec) {
  config.validate();
  const DistributedProblem problem = build_problem(config, exec);
  ExperimentResult result;
  result.constants = problem.constants();
  result.f_star = problem.f_star().value_or(0.0);
  result.params = resolve_params(config, problem);

  std::vector<std::optional<int>> points;
  if (config.mode == ParamMode::kTuned)
    for (int i : config.exponents()) points.emplace_back(i);
  else
    points.emplace_back(std::nullopt);

  const RunConfig run_cfg{config.rounds, config.budget_coords, config.eps};
  result.traces.resize(points.size());
  // Grid points run concurrently; each run keeps its worker loop serial.
  const bool across = exec.parallel() && points.size() > 1;
  const ExecConfig inner = across ? ExecConfig{} : exec;
  for_each_worker(points.size(), across ? exec : ExecConfig{}, [&](std::size_t k) {
    auto method = make_method(config, problem, result.params, points[k], inner);
    Trace t = run(*method, problem, run_cfg);
    t.grid_exponent = points[k];
    t.label = to_string(config.algo);
    if (points[k]) t.label += "_2p" + std::to_string(*points[k]);
    result.traces[k] = std::move(t);
  });
  if (config.eps > 0.0) result.best = best_of(result.traces, config.eps);

  std::ostringstream m;
  m << serialize(config);
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  const auto& c = result.constants;
  const auto& p = result.params;
  m << "result.config_hash=" << hash << '\n'
    << "result.dim=" << problem.dim() << '\n'
    << "result.f_star=" << format_double(result.f_star) << '\n'
    << "result.L=" << format_double(c.L) << '\n'
    << "result.L_max=" << format_double(c.L_max) << '\n'
    << "result.Lhat_bound=" << format_double(c.Lhat_bound) << '\n'
    << "result.mu=" << format_double(c.mu) << '\n'
    << "result.kw=" << p.kw << '\n'
    << "result.ka=" << p.ka << '\n'
    << "result.omega=" << format_double(p.omega) << '\n'
    << "result.alpha=" << format_double(p.alpha) << '\n'
    << "result.beta=" << format_double(p.beta) << '\n'
    << "result.p=" << format_double(p.choice.p) << '\n'
    << "result.tau=" << format_double(p.choice.tau) << '\n'
    << "result.mu_r=" << format_double(p.choice.mu_r) << '\n'
    << "result.provenance=" << to_string(p.choice.provenance) << '\n';
  for (const auto& t : result.traces) {
    std::uint64_t heads = 0;
    for (const auto& row : t.rows) heads += static_cast<std::uint64_t>(row.coin);
    m << "result.trace." << t.label << ".rounds=" << t.rows.back().round << '\n'
      << "result.trace." << t.label << ".heads=" << heads << '\n'
      << "result.trace." << t.label << ".status=" << to_string(t.status) << '\n';
    if (!t.diagnostic.empty())
      m << "result.trace." << t.label << ".diagnostic=" << t.diagnostic << '\n';
  }
  m << "result.best=" << (result.best ? result.traces[*result.best].label : "none") << '\n';
  result.manifest = m.str();

  if (!config.out.empty()) {
    const std::filesystem::path dir(config.out);
    std::filesystem::create_directories(dir);
    for (const auto& t : result.traces) {
      std::ostringstream csv;
      write_trace_csv(t, csv);
      const auto path = dir / (t.label + ".csv");
      write_file_atomic(path, csv.str());
      result.files.push_back(path);
    }
    write_file_atomic(dir / "manifest.txt", result.manifest);
    result.files.push_back(dir / "manifest.txt");
    write_file_atomic(dir / "plot.svg", render_svg(result.traces));
    result.files.push_back(dir / "plot.svg");
  }
  return result;
}

}  // namespace bidiopt
