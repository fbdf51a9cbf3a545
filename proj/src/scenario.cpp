#include "fluidq/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fluidq/error.hpp"

namespace fluidq {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = s.find(sep, begin);
    out.push_back(trim(s.substr(begin, pos == std::string_view::npos ? std::string_view::npos : pos - begin)));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

double to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(fmt::format("'{}' is not a finite number", s));
  }
  return v;
}

template <class Int>
Int to_integer(std::string_view s) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(fmt::format("'{}' is not an integer", s));
  return v;
}

std::vector<double> to_doubles(std::string_view s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (auto part : split(s, ',')) out.push_back(to_double(part));
  return out;
}

// "kind a=1 b=2" -> kind + named parameters, each of which must be consumed.
class Preset {
 public:
  explicit Preset(std::string_view text) {
    auto parts = tokens(text);
    if (parts.empty()) throw ConfigError("missing kind");
    kind_ = std::string(parts[0]);
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const auto eq = parts[i].find('=');
      if (eq == std::string_view::npos) throw ConfigError(fmt::format("expected name=value, got '{}'", parts[i]));
      const std::string name(parts[i].substr(0, eq));
      if (!params_.emplace(name, std::string(parts[i].substr(eq + 1))).second) {
        throw ConfigError(fmt::format("parameter '{}' given twice", name));
      }
    }
  }

  const std::string& kind() const { return kind_; }

  std::string_view raw(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError(fmt::format("{} needs parameter '{}'", kind_, name));
    used_.insert(name);
    return it->second;
  }
  double number(const std::string& name) { return to_double(raw(name)); }
  std::vector<double> numbers(const std::string& name) { return to_doubles(raw(name)); }

  void finish() const {
    for (const auto& [name, value] : params_) {
      if (!used_.count(name)) throw ConfigError(fmt::format("unknown parameter '{}' for {}", name, kind_));
    }
  }

 private:
  std::string kind_;
  std::map<std::string, std::string> params_;
  std::set<std::string> used_;
};

ServiceLaw parse_law(std::string_view text) {
  Preset preset(text);
  std::optional<ServiceLaw> law;
  if (preset.kind() == "exponential") {
    law = make_exponential(preset.number("rate"));
  } else if (preset.kind() == "lognormal") {
    const double mu = preset.number("mu");
    law = make_lognormal(mu, preset.number("sigma"));
  } else if (preset.kind() == "uniform") {
    const double a = preset.number("a");
    law = make_uniform(a, preset.number("b"));
  } else if (preset.kind() == "deterministic") {
    law = make_deterministic(preset.number("value"));
  } else {
    throw ConfigError(fmt::format("unknown law '{}'", preset.kind()));
  }
  preset.finish();
  return *law;
}

RateFunction parse_rate(std::string_view text) {
  Preset preset(text);
  std::optional<RateFunction> rate;
  if (preset.kind() == "constant") {
    rate = RateFunction(ConstantRate{preset.number("value")});
  } else if (preset.kind() == "capped_linear") {
    CappedLinearRate p;
    p.intercept = preset.number("intercept");
    p.slope = preset.number("slope");
    p.cap = preset.number("cap");
    rate = RateFunction(p);
  } else if (preset.kind() == "table") {
    TableRate p;
    p.x = preset.numbers("x");
    p.k = preset.numbers("k");
    p.lipschitz = preset.number("lipschitz");
    rate = RateFunction(std::move(p));
  } else {
    throw ConfigError(fmt::format("unknown rate function '{}'", preset.kind()));
  }
  preset.finish();
  return *rate;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
  return out;
}

std::string format_law(const ServiceLaw& law) {
  return std::visit(Overloaded{
                        [](const Exponential& p) { return fmt::format("exponential rate={}", num(p.rate)); },
                        [](const Lognormal& p) {
                          return fmt::format("lognormal mu={} sigma={}", num(p.mu), num(p.sigma));
                        },
                        [](const Uniform& p) { return fmt::format("uniform a={} b={}", num(p.a), num(p.b)); },
                        [](const Deterministic& p) { return fmt::format("deterministic value={}", num(p.value)); },
                    },
                    law.params());
}

std::string format_rate(const RateFunction& rate) {
  return std::visit(Overloaded{
                        [](const ConstantRate& p) { return fmt::format("constant value={}", num(p.value)); },
                        [](const CappedLinearRate& p) {
                          return fmt::format("capped_linear intercept={} slope={} cap={}", num(p.intercept),
                                             num(p.slope), num(p.cap));
                        },
                        [](const TableRate& p) {
                          return fmt::format("table x={} k={} lipschitz={}", join(p.x), join(p.k), num(p.lipschitz));
                        },
                    },
                    rate.params());
}

bool on_grid(double t, double dt) {
  const double ratio = t / dt;
  return std::abs(ratio - std::round(ratio)) < 1e-6;
}

}  // namespace

std::vector<double> LevelGrid::points() const {
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
  out.reserve(count + 1);
  for (std::size_t i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

void Scenario::validate() const {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw ConfigError("name must be a single nonempty word");
  }
  if (!(lambda >= 0.0)) throw ConfigError(fmt::format("lambda must be nonnegative, got {}", lambda));
  if (!(q0 >= 0.0)) throw ConfigError("q0 must be nonnegative");
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be nonnegative");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(report_step > 0.0) || !on_grid(report_step, dt)) {
    throw ConfigError("report_step must be a positive multiple of dt");
  }
  if (!(x_grid.start >= 0.0) || !(x_grid.step > 0.0) || !(x_grid.stop >= x_grid.start)) {
    throw ConfigError("x_grid must be start:stop:step with 0 <= start <= stop and step > 0");
  }
  if (!std::is_sorted(snapshots.begin(), snapshots.end()) ||
      std::adjacent_find(snapshots.begin(), snapshots.end()) != snapshots.end()) {
    throw ConfigError("snapshots must be strictly increasing");
  }
  for (double t : snapshots) {
    if (t < 0.0 || t > horizon + 1e-12 || !on_grid(t, dt)) {
      throw ConfigError(fmt::format("snapshot time {} must be a grid time in [0, horizon]", t));
    }
  }
  if (n_list.empty()) throw ConfigError("n_list must not be empty");
  for (int n : n_list) {
    if (n < 1) throw ConfigError("n_list entries must be positive");
  }
  if (replications < 1) throw ConfigError("replications must be positive");
  if (!(gc_m > 0.0) || !(gc_l > 0.0)) throw ConfigError("gc_m and gc_l must be positive");
  if (!std::isfinite(initial.lipschitz()) && has_fluid_target()) throw ConfigError("initial tail F must be Lipschitz");
  if (const auto* grid = std::get_if<TailFunction>(&initial.source()); grid && grid->values().back() > 0.0) {
    throw ConfigError("initial grid tail must reach 0 at its last point");
  }
  fluid::check_initial_condition(initial, q0);
}

fluid::FluidParams Scenario::fluid_params() const {
  fluid::FluidParams p;
  p.lambda = lambda;
  p.service = service;
  p.rate = rate;
  p.initial = initial;
  p.q0 = q0;
  p.horizon = horizon;
  p.dt = dt;
  return p;
}

ArrivalLaw Scenario::arrival_law(int n) const {
  if (!(lambda > 0.0)) throw ConfigError("arrival law needs lambda > 0");
  return ArrivalLaw(arrival, 1.0 / (n * lambda));
}

std::size_t Scenario::steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

std::size_t Scenario::report_stride() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(report_step / dt)));
}

std::vector<std::size_t> Scenario::report_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i <= steps(); i += report_stride()) out.push_back(i);
  return out;
}

std::vector<double> Scenario::report_times() const {
  std::vector<double> out;
  for (std::size_t i : report_indices()) out.push_back(static_cast<double>(i) * dt);
  return out;
}

std::vector<std::size_t> Scenario::snapshot_indices() const {
  std::vector<std::size_t> out;
  for (double t : snapshots) out.push_back(static_cast<std::size_t>(std::llround(t / dt)));
  return out;
}

std::vector<std::uint64_t> Scenario::seeds() const {
  std::vector<std::uint64_t> out;
  for (int r = 0; r < replications; ++r) out.push_back(seed + static_cast<std::uint64_t>(r));
  return out;
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  std::map<std::string, std::pair<std::string, int>> entries;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!entries.emplace(key, std::make_pair(value, line_no)).second) {
      throw ConfigError(fmt::format("line {}: key '{}' given twice", line_no, key));
    }
  }

  std::set<std::string> consumed;
  auto with = [&](const std::string& key, auto&& apply) {
    auto it = entries.find(key);
    if (it == entries.end()) return false;
    consumed.insert(key);
    try {
      apply(std::string_view(it->second.first));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: key '{}': {}", it->second.second, key, e.what()));
    }
    return true;
  };
  auto require = [&](const std::string& key, auto&& apply) {
    if (!with(key, apply)) throw ConfigError(fmt::format("missing required key '{}'", key));
  };

  with("name", [&](std::string_view v) { s.name = std::string(v); });
  require("lambda", [&](std::string_view v) {
    s.lambda = to_double(v);
    if (s.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  });
  with("arrival", [&](std::string_view v) { s.arrival = parse_law(v); });
  require("service", [&](std::string_view v) { s.service = parse_law(v); });
  with("rate", [&](std::string_view v) { s.rate = parse_rate(v); });
  with("q0", [&](std::string_view v) { s.q0 = to_double(v); });
  require("horizon", [&](std::string_view v) { s.horizon = to_double(v); });
  with("dt", [&](std::string_view v) { s.dt = to_double(v); });
  with("report_step", [&](std::string_view v) { s.report_step = to_double(v); });
  with("x_grid", [&](std::string_view v) {
    auto parts = split(v, ':');
    if (parts.size() != 3) throw ConfigError("expected start:stop:step");
    s.x_grid = {to_double(parts[0]), to_double(parts[1]), to_double(parts[2])};
  });
  with("snapshots", [&](std::string_view v) { s.snapshots = to_doubles(v); });
  with("n_list", [&](std::string_view v) {
    s.n_list.clear();
    for (auto part : split(v, ',')) s.n_list.push_back(to_integer<int>(part));
  });
  with("replications", [&](std::string_view v) { s.replications = to_integer<int>(v); });
  with("seed", [&](std::string_view v) { s.seed = to_integer<std::uint64_t>(v); });
  with("gc_m", [&](std::string_view v) { s.gc_m = to_double(v); });
  with("gc_l", [&](std::string_view v) { s.gc_l = to_double(v); });

  std::string initial_kind = "empty";
  std::string initial_text;
  with("initial", [&](std::string_view v) {
    initial_text = std::string(v);
    Preset preset(v);
    initial_kind = preset.kind();
    if (initial_kind == "empty") {
      preset.finish();
    } else if (initial_kind == "grid") {
      auto x = preset.numbers("x");
      auto values = preset.numbers("values");
      preset.finish();
      s.initial = InitialTail::from_grid(TailFunction(std::move(x), std::move(values)));
    } else if (initial_kind != "scaled_law") {
      throw ConfigError(fmt::format("unknown initial kind '{}'", initial_kind));
    }
  });
  if (initial_kind == "scaled_law") {
    Preset preset(initial_text);
    const double scale = preset.number("scale");
    preset.finish();
    require("initial_law", [&](std::string_view v) { s.initial = InitialTail::from_law(scale, parse_law(v)); });
  }

  for (const auto& [key, value] : entries) {
    if (!consumed.count(key)) throw ConfigError(fmt::format("line {}: unknown key '{}'", value.second, key));
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read scenario file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string serialize(const Scenario& s) {
  std::string out;
  auto line = [&out](std::string_view key, const std::string& value) { out += fmt::format("{} = {}\n", key, value); };
  line("name", s.name);
  line("lambda", num(s.lambda));
  line("arrival", format_law(s.arrival));
  line("service", format_law(s.service));
  line("rate", format_rate(s.rate));
  std::visit(Overloaded{
                 [&](const std::monostate&) { line("initial", "empty"); },
                 [&](const InitialTail::FromLaw& f) {
                   line("initial", fmt::format("scaled_law scale={}", num(f.scale)));
                   line("initial_law", format_law(f.law));
                 },
                 [&](const TailFunction& f) {
                   line("initial", fmt::format("grid x={} values={}", join({f.grid().begin(), f.grid().end()}),
                                               join({f.values().begin(), f.values().end()})));
                 },
             },
             s.initial.source());
  line("q0", num(s.q0));
  line("horizon", num(s.horizon));
  line("dt", num(s.dt));
  line("report_step", num(s.report_step));
  line("x_grid", fmt::format("{}:{}:{}", num(s.x_grid.start), num(s.x_grid.stop), num(s.x_grid.step)));
  line("snapshots", join(s.snapshots));
  std::string ns;
  for (std::size_t i = 0; i < s.n_list.size(); ++i) ns += (i ? "," : "") + std::to_string(s.n_list[i]);
  line("n_list", ns);
  line("replications", std::to_string(s.replications));
  line("seed", std::to_string(s.seed));
  line("gc_m", num(s.gc_m));
  line("gc_l", num(s.gc_l));
  return out;
}

std::string scenario_hash(const Scenario& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : serialize(s)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace fluidq
