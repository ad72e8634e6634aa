#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_config.hpp"
#include "subhess/corpus.hpp"
#include "subhess/exponents.hpp"
#include "subhess/fields.hpp"
#include "subhess/geometry.hpp"
#include "subhess/hessian.hpp"
#include "subhess/identities.hpp"
#include "subhess/measures.hpp"

#ifndef SUBHESS_VERSION
#define SUBHESS_VERSION "unknown"
#endif

namespace subhess::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kGeneral = "general";

// Non-finite doubles are written as the strings "inf", "-inf" and "nan".
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

struct Outcome {
  json result = json::object();
  bool violation = false;
};

struct Context {
  const Config& cfg;
  const std::string& section;
  fs::path out_dir;
  std::vector<std::string> files;

  FieldSystem system() const {
    const auto& name = cfg.get(kGeneral, "system");
    if (is_builtin_name(name)) return builtin(name);
    return load_field_system(name);
  }
  std::uint64_t seed() const { return static_cast<std::uint64_t>(cfg.integer(kGeneral, "seed")); }
  long integer(const std::string& key) const { return cfg.integer(section, key); }
  std::size_t count(const std::string& key) const { return static_cast<std::size_t>(cfg.integer(section, key)); }
  double real(const std::string& key) const { return cfg.real(section, key); }

  std::vector<double> point(const std::string& key, std::size_t n) const {
    auto p = cfg.point(section, key);
    if (cfg.get(section, key) == "origin") return std::vector<double>(n, 0.0);
    if (p.size() != n)
      throw ConfigError(key, "expected " + std::to_string(n) + " coordinates, got " + std::to_string(p.size()));
    return p;
  }

  std::vector<Polynomial> polynomials(const std::string& key, std::size_t n) const {
    std::vector<Polynomial> out;
    for (const auto& text : cfg.polynomials(section, key)) {
      try {
        out.push_back(parse_polynomial(text, n));
      } catch (const RejectedInput& e) {
        throw ConfigError(key, e.what());
      }
    }
    return out;
  }

  Polynomial polynomial(const std::string& key, std::size_t n) const {
    auto p = polynomials(key, n);
    if (p.size() != 1) throw ConfigError(key, "expected a single polynomial");
    return p.front();
  }

  std::ofstream open(const std::string& name) {
    files.push_back(name);
    std::ofstream f(out_dir / name);
    if (!f) throw Error("cannot write " + (out_dir / name).string());
    return f;
  }
};

json system_json(const FieldSystem& s) {
  json j;
  j["name"] = s.name();
  j["n"] = s.n();
  j["m"] = s.m();
  if (s.homogeneous_dimension())
    j["homogeneous_dimension"] = *s.homogeneous_dimension();
  else
    j["homogeneous_dimension"] = nullptr;
  return j;
}

json identity_json(const IdentityResult& r) {
  json j;
  j["name"] = r.name;
  j["status"] = to_string(r.status);
  j["residual_norm"] = num(r.residual_norm);
  if (r.residual && !r.residual->is_zero()) j["residual"] = r.residual->to_string();
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

json bound_json(const ExponentBound& b) {
  json j;
  j["value"] = b.to_string();
  j["approx"] = b.value ? num(b.value->get_d()) : json("inf");
  j["inclusive"] = b.inclusive;
  return j;
}

json exponents_json(const ExponentReport& r) {
  json j;
  j["k"] = r.k;
  j["m"] = r.m;
  j["Q"] = r.Q;
  j["p_laplace_max"] = bound_json(r.p_laplace_max);
  j["q_gradient_max"] = bound_json(r.q_gradient_max);
  j["r_energy_max"] = bound_json(r.r_energy_max);
  j["p_sobolev_max"] = bound_json(r.p_sobolev_max);
  j["holder_threshold_k"] = r.holder_threshold_k.get_str();
  if (r.holder_alpha)
    j["holder_alpha"] = r.holder_alpha->get_str();
  else
    j["holder_alpha"] = nullptr;
  return j;
}

// ---------------------------------------------------------------- commands

Outcome check_system(Context& c) {
  const auto s = c.system();
  const auto pts = random_points(s.n(), c.count("samples"), c.real("sample_radius"), c.seed());
  const auto r = check_conditions(s, pts, static_cast<int>(c.integer("max_step")));
  Outcome o;
  json& j = o.result;
  j["system"] = system_json(s);
  j["anti_self_adjoint"] = r.anti_self_adjoint;
  j["hormander"] = {{"holds", r.hormander.holds}, {"step", r.hormander.step}, {"min_rank", r.hormander.min_rank}};
  j["step2_vanishing"] = r.step2_vanishing;
  json nv = json::array();
  for (const auto& t : r.nonvanishing) nv.push_back({t.k + 1, t.i + 1, t.j + 1});
  j["nonvanishing_second_commutators"] = nv;
  j["all_second_commutators_vanish"] = r.all_second_commutators_vanish;
  j["weakened_span"] = r.weakened_span;
  j["weakened_span_residual"] = nums(r.weakened_span_residual);
  j["z_vanishes"] = r.z_vanishes;
  j["numeric_error"] = r.numeric_error ? json(*r.numeric_error) : json(nullptr);
  // Anti-self-adjointness and the rank condition are standing hypotheses;
  // the step-2 condition is reported, not required.
  o.violation = !(r.all_anti_self_adjoint() && r.hormander.holds);
  return o;
}

Outcome verify_identities(Context& c) {
  const auto s = c.system();
  const auto& corpus = c.cfg.get(c.section, "corpus");
  int degree = -1;
  if (corpus.rfind("random", 0) == 0 && corpus.size() > 6) {
    try {
      std::size_t used = 0;
      degree = std::stoi(corpus.substr(6), &used);
      if (used != corpus.size() - 6) degree = -1;
    } catch (const std::exception&) {
      degree = -1;
    }
  }
  if (degree < 0) throw ConfigError("corpus", "expected random<d> with a degree d >= 0, got '" + corpus + "'");
  const auto polys = random_corpus(s.n(), c.count("corpus_size"), degree, c.seed(), static_cast<int>(c.integer("terms")));
  const auto cond = check_conditions(s, {}, 1);
  const bool expect_zero = cond.step2_vanishing;
  Outcome o;
  json& j = o.result;
  j["system"] = system_json(s);
  j["step2_vanishing"] = cond.step2_vanishing;
  j["expected_residual"] = expect_zero ? "zero" : "nonzero (second commutators do not vanish)";
  json items = json::array();
  std::size_t nonzero = 0, total = 0, classical_nonzero = 0;
  for (const auto& u : polys) {
    const auto d = verify_divergence_identity(s, u);
    json item;
    item["u"] = u.to_string();
    json cols = json::array();
    for (const auto& col : d.columns) {
      json cj = identity_json(col);
      const bool zero = col.status == IdentityStatus::exact_zero;
      cj["label"] = zero ? "zero" : (expect_zero ? "violation" : "expected");
      nonzero += zero ? 0 : 1;
      ++total;
      cols.push_back(cj);
    }
    item["columns"] = cols;
    if (!d.classical.empty()) {
      json cl = json::array();
      for (const auto& col : d.classical) {
        cl.push_back(identity_json(col));
        if (col.status != IdentityStatus::exact_zero) ++classical_nonzero;
      }
      item["classical"] = cl;
    }
    items.push_back(item);
  }
  j["corpus"] = {{"kind", corpus}, {"size", polys.size()}, {"max_degree", degree}};
  j["columns_checked"] = total;
  j["nonzero_columns"] = nonzero;
  j["classical_nonzero_columns"] = classical_nonzero;
  j["items"] = items;
  o.violation = (expect_zero && nonzero > 0) || classical_nonzero > 0;
  return o;
}

Outcome kconvex(Context& c) {
  const auto s = c.system();
  const auto u = c.polynomial("u", s.n());
  const auto pts = random_points(s.n(), c.count("samples"), c.real("sample_radius"), c.seed());
  const auto r = is_k_convex(s, u, c.count("k"), pts, c.real("tol"));
  Outcome o;
  json& j = o.result;
  j["system"] = system_json(s);
  j["u"] = u.to_string();
  j["k"] = c.integer("k");
  j["holds"] = r.holds;
  j["worst_j"] = r.worst_j;
  j["worst_value"] = num(r.worst_value);
  j["worst_point"] = nums(r.worst_point);
  return o;
}

Outcome weak_continuity(Context& c) {
  const auto s = c.system();
  auto pieces = c.polynomials("target", s.n());
  const Target target = pieces.size() == 1 ? Target::polynomial(pieces.front()) : Target::max_of(std::move(pieces));
  const auto eta = Cutoff::bump(c.point("eta_center", s.n()), c.real("eta_rho"));
  LadderOptions opt;
  opt.h = c.real("h");
  opt.eps_ladder = c.cfg.reals(c.section, "eps_ladder");
  opt.alphas = c.cfg.reals(c.section, "alpha");
  opt.margin_tol = c.real("margin_tol");
  opt.error_estimates = c.cfg.boolean(c.section, "error_estimates");
  const auto r = weak_continuity_experiment(s, target, eta, opt);

  Outcome o;
  json& j = o.result;
  j["system"] = system_json(s);
  j["target"] = r.target;
  j["eta"] = r.eta_id;
  j["alpha"] = nums(r.alphas);
  j["valid"] = r.valid;
  j["invalid_reason"] = r.invalid_reason;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json rj;
    rj["eps"] = num(row.eps);
    rj["l1_delta"] = num(row.l1_delta);
    rj["l1_mass"] = num(row.l1_mass);
    rj["pairing"] = nums(row.pairing);
    rj["gap"] = nums(row.gap);
    rj["error_estimate"] = nums(row.error_estimate);
    rj["kconvex_margin"] = num(row.kconvex_margin);
    rj["f2_ratio"] = num(row.f2_ratio);
    rows.push_back(rj);
  }
  j["rows"] = rows;
  json per_alpha = json::array();
  bool decreasing = true;
  for (std::size_t a = 0; a < r.alphas.size(); ++a) {
    const bool dec = r.gaps_decrease(a);
    decreasing = decreasing && dec;
    per_alpha.push_back({{"alpha", num(r.alphas[a])},
                         {"gaps_decrease", dec},
                         {"final_relative_gap", num(r.final_relative_gap(a))},
                         {"csv", "weak-continuity.alpha-" + std::to_string(a) + ".csv"}});
    auto f = c.open("weak-continuity.alpha-" + std::to_string(a) + ".csv");
    f << "eps,l1_delta,pairing_gap,kconvex_margin\n";
    for (const auto& row : r.rows)
      f << format_real(row.eps) << ',' << format_real(row.l1_delta) << ',' << format_real(row.gap[a]) << ','
        << format_real(row.kconvex_margin) << '\n';
  }
  j["per_alpha"] = per_alpha;
  j["f2_ratio_spread"] = num(r.f2_ratio_spread());
  o.violation = !r.valid || !decreasing;
  return o;
}

Outcome monotonicity(Context& c) {
  const auto s = c.system();
  const auto u = c.polynomial("u", s.n());
  const auto center = c.point("center", s.n());
  const double radius = c.real("radius");
  Polynomial v = u;
  if (c.cfg.get(c.section, "v").empty()) {
    // The bump coefficient goes through an exact rational conversion.
    v = u + ball_bump(center, radius, static_cast<unsigned>(c.integer("bump_order"))) * Rational(c.real("bump_scale"));
  } else {
    v = c.polynomial("v", s.n());
  }
  MonotonicityOptions opt;
  opt.coarse_per_axis = c.count("coarse_per_axis");
  const auto which = c.cfg.get(c.section, "operator") == "f2" ? MonotoneOperator::f2 : MonotoneOperator::f2_star;
  const auto r = monotonicity_gap(s, u, v, Domain::ball(center, radius), which, opt);
  Outcome o;
  json& j = o.result;
  j["system"] = system_json(s);
  j["operator"] = c.cfg.get(c.section, "operator");
  j["u"] = u.to_string();
  j["v"] = v.to_string();
  j["gap"] = num(r.gap);
  j["gap_coarse"] = num(r.gap_coarse);
  j["quadrature_error"] = num(r.quadrature_error);
  j["richardson_relative"] = num(r.richardson_relative);
  j["nodes"] = r.nodes;
  j["min_ellipticity_margin"] = num(r.min_ellipticity_margin);
  j["small_margin"] = r.small_margin;
  j["max_boundary_difference"] = num(r.max_boundary_difference);
  j["predicted_sign_holds"] = r.predicted_sign_holds();
  o.violation = !r.predicted_sign_holds();
  return o;
}

Outcome local_bounds_cmd(Context& c) {
  const auto s = c.system();
  const auto center = c.point("center", s.n());
  const auto inner = Domain::cube(center, c.real("inner_half"));
  const auto outer = Domain::cube(center, c.real("outer_half"));
  LocalBoundsOptions opt;
  opt.k = static_cast<int>(c.integer("k"));
  opt.q = c.real("q");
  opt.r = c.real("r");
  if (c.integer("Q") > 0) opt.Q = static_cast<int>(c.integer("Q"));
  opt.convexity_tol = c.real("convexity_tol");
  opt.h = c.real("h");
  const auto& grid_path = c.cfg.get(c.section, "grid");
  Outcome o;
  json& j = o.result;
  j["system"] = system_json(s);
  LocalBoundsReport r;
  if (grid_path.empty()) {
    const auto u = c.polynomial("u", s.n());
    j["input"] = u.to_string();
    r = local_bounds(s, u, inner, outer, opt);
  } else {
    std::ifstream in(grid_path);
    const auto g = read_grid(in);
    j["input"] = "grid:" + g.provenance;
    r = local_bounds(s, g, inner, outer, opt);
  }
  j["l1_outer"] = num(r.l1_outer);
  j["sup_inner"] = num(r.sup_inner);
  j["gradient_norm"] = num(r.gradient_norm);
  j["energy"] = num(r.energy);
  j["f2_integral"] = num(r.f2_integral);
  j["sup_ratio"] = num(r.sup_ratio);
  j["gradient_ratio"] = num(r.gradient_ratio);
  j["energy_ratio"] = num(r.energy_ratio);
  j["f2_ratio"] = num(r.f2_ratio);
  j["kconvex_margin"] = num(r.kconvex_margin);
  j["h"] = num(r.h);
  j["finite"] = r.finite();
  j["exponents"] = exponents_json(r.exponents);
  o.violation = !r.finite();
  return o;
}

Outcome cc_geometry(Context& c) {
  const auto s = c.system();
  const auto center = c.point("center", s.n());
  const auto radii = c.cfg.reals(c.section, "radii");
  VolumeOptions vo;
  vo.samples = c.count("samples");
  vo.seed = c.seed();
  vo.explore_paths = c.count("explore_paths");
  vo.budget.segments = c.count("coarse_segments");
  vo.budget.restarts = c.count("coarse_restarts");
  vo.budget.iterations = c.count("coarse_iterations");
  Outcome o;
  json& j = o.result;
  j["system"] = system_json(s);
  j["center"] = nums(center);

  bool fit_possible = radii.size() >= 3 && radii.front() > 0 && radii.back() >= 4.0 * radii.front();
  for (std::size_t i = 1; i < radii.size(); ++i) fit_possible = fit_possible && radii[i] > radii[i - 1];
  std::vector<VolumeEstimate> volumes;
  if (fit_possible) {
    const auto h = homogeneous_dimension(s, center, radii, vo);
    volumes = h.volumes;
    j["fit"] = {{"status", h.status},
                {"Q_fit", num(h.Q_fit)},
                {"Q_ceil", h.Q_ceil},
                {"doubling_ok", h.doubling_ok}};
    o.violation = h.status == "ok" && !h.doubling_ok;
  } else {
    for (std::size_t i = 0; i < radii.size(); ++i) {
      VolumeOptions oi = vo;
      oi.seed = derive_seed(vo.seed, 0x1000 + i);
      volumes.push_back(ball_volume(s, center, radii[i], oi));
    }
    j["fit"] = nullptr;
  }
  json vj = json::array();
  auto csv = c.open("cc-geometry.volumes.csv");
  csv << "R,volume,stderr\n";
  for (const auto& v : volumes) {
    vj.push_back({{"R", num(v.R)},
                  {"volume", num(v.volume)},
                  {"stderr", num(v.stderr_)},
                  {"samples", v.samples},
                  {"inside", v.inside},
                  {"box_lo", nums(v.box_lo)},
                  {"box_hi", nums(v.box_hi)},
                  {"enlargements", v.enlargements},
                  {"log", v.log}});
    csv << format_real(v.R) << ',' << format_real(v.volume) << ',' << format_real(v.stderr_) << '\n';
  }
  j["volumes"] = vj;

  if (!c.cfg.get(c.section, "target").empty()) {
    const auto y = c.point("target", s.n());
    CCBudget b;
    b.segments = c.count("segments");
    b.restarts = c.count("restarts");
    b.iterations = c.count("iterations");
    b.seed = c.seed();
    const auto d = cc_distance(s, center, y, b);
    auto pf = c.open("cc-geometry.path.csv");
    write_path_csv(pf, d.path);
    j["distance"] = {{"target", nums(y)},
                     {"T", num(d.T)},
                     {"T_infeasible", num(d.T_infeasible)},
                     {"endpoint_error", num(d.path.endpoint_error)},
                     {"path_csv", "cc-geometry.path.csv"}};
  } else {
    j["distance"] = nullptr;
  }
  return o;
}

Outcome exponents_cmd(Context& c) {
  int m = static_cast<int>(c.integer("m"));
  int Q = static_cast<int>(c.integer("Q"));
  // The system is consulted only for values left at 0.
  if (m == 0 || Q == 0) {
    const auto s = c.system();
    if (m == 0) m = static_cast<int>(s.m());
    if (Q == 0) {
      if (!s.homogeneous_dimension()) throw ConfigError("Q", "the system has no known homogeneous dimension; set Q");
      Q = *s.homogeneous_dimension();
    }
  }
  const int k = static_cast<int>(c.integer("k"));
  if (m < 2) throw ConfigError("m", "must be at least 2");
  if (k > m) throw ConfigError("k", "must not exceed m = " + std::to_string(m));
  if (Q < 2) throw ConfigError("Q", "must be at least 2");
  Outcome o;
  o.result = exponents_json(exponent_report(k, m, Q));
  return o;
}

const std::map<std::string, std::function<Outcome(Context&)>>& handlers() {
  static const std::map<std::string, std::function<Outcome(Context&)>> h{
      {"check-system", check_system},   {"verify-identities", verify_identities},
      {"kconvex", kconvex},             {"weak-continuity", weak_continuity},
      {"monotonicity", monotonicity},   {"local-bounds", local_bounds_cmd},
      {"cc-geometry", cc_geometry},     {"exponents", exponents_cmd}};
  return h;
}

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d{
      {"check-system", "anti-self-adjointness, rank condition and step-2 vanishing of a field system"},
      {"verify-identities", "exact divergence-identity residuals over a polynomial corpus"},
      {"kconvex", "sampled k-convexity of a polynomial"},
      {"weak-continuity", "pairing convergence along a mollification ladder"},
      {"monotonicity", "integrated operator gap for an ordered pair with equal boundary values"},
      {"local-bounds", "sup, gradient, energy and operator-mass ratios on nested cubes"},
      {"cc-geometry", "Carnot-Caratheodory ball volumes, dimension fit and distances"},
      {"exponents", "admissible exponent ranges for (k, m, Q)"}};
  return d;
}

std::string dashed(std::string key) {
  for (auto& ch : key)
    if (ch == '_') ch = '-';
  return key;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical verification harness for subelliptic 2-Hessian operators", "subhess"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SUBHESS_VERSION);

  // Raw flag values by (section, key); only flags given on the command line are set.
  std::map<std::string, std::map<std::pair<std::string, std::string>, std::string>> flags;
  std::map<std::string, std::string> config_paths;
  for (const auto& cmd : command_names()) {
    auto* sub = app.add_subcommand(cmd, descriptions().at(cmd));
    // `--h` is a lattice spacing, so help is long-form only.
    sub->set_help_flag("--help", "print this help message and exit");
    sub->add_option("--config", config_paths[cmd], "configuration file (flat sectioned key = value)");
    for (const std::string& section : {std::string(kGeneral), cmd}) {
      for (const auto* k : keys_of(section)) {
        std::string names = "--" + k->key;
        if (dashed(k->key) != k->key) names += ",--" + dashed(k->key);
        auto* opt = sub->add_option_function<std::string>(
            names, [&flags, cmd, section, key = k->key](const std::string& v) { flags[cmd][{section, key}] = v; },
            k->help + " [" + k->default_value + "]");
        opt->allow_extra_args(false);
      }
    }
  }

  std::vector<const char*> argv{"subhess"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitRejected;
  }

  std::string command;
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();
  const auto t0 = std::chrono::steady_clock::now();

  std::optional<Config> cfg;
  try {
    cfg.emplace(command);
    if (!config_paths[command].empty()) cfg->merge_file(config_paths[command]);
    for (const auto& [sk, v] : flags[command]) cfg->set(sk.first, sk.second, v);
  } catch (const RejectedInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitRejected;
  }

  const fs::path out_dir = cfg->get(kGeneral, "out");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    err << "error: out: cannot create '" << out_dir.string() << "': " << ec.message() << '\n';
    return kExitRejected;
  }

  Context ctx{*cfg, command, out_dir, {}};
  json report;
  report["tool"] = "subhess";
  report["version"] = SUBHESS_VERSION;
  report["command"] = command;
  report["seed"] = cfg->integer(kGeneral, "seed");
  report["config"] = cfg->to_json();
  int code = kExitOk;
  try {
    Outcome o = handlers().at(command)(ctx);
    code = o.violation ? kExitViolation : kExitOk;
    report["status"] = o.violation ? "violation" : "ok";
    report["error"] = nullptr;
    report["result"] = std::move(o.result);
  } catch (const RejectedInput& e) {
    code = kExitRejected;
    report["status"] = "rejected";
    report["error"] = e.what();
    report["result"] = nullptr;
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    code = kExitViolation;
    report["status"] = "error";
    report["error"] = e.what();
    report["result"] = nullptr;
    err << "error: " << e.what() << '\n';
  }
  report["exit_code"] = code;
  report["files"] = ctx.files;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report["timing"] = {{"wall_seconds", wall}};

  {
    std::ofstream f(out_dir / (command + ".json"));
    f << report.dump(2) << '\n';
    std::ofstream c(out_dir / (command + ".config"));
    c << cfg->serialize();
    if (!f || !c) {
      err << "error: cannot write reports to '" << out_dir.string() << "'\n";
      return kExitViolation;
    }
  }
  out << command << ": " << report["status"].get<std::string>() << " (report: " << (out_dir / (command + ".json")).string()
      << ")\n";
  return code;
}

}  // namespace subhess::cli
