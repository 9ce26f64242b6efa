#include "irlpilot/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <toml.hpp>

#include "irlpilot/csv.hpp"
#include "irlpilot/errors.hpp"

namespace irlpilot {
namespace {

std::string Where(std::string_view section, std::string_view key) {
  return std::string(section) + "." + std::string(key);
}

// Reads the keys of one section, remembering which ones were consumed so that
// leftovers (typos) can be reported.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  void Real(std::string_view key, double& out) {
    const toml::node* node = Find(key);
    if (!node) return;
    if (node->is_integer()) {
      out = static_cast<double>(*node->value<std::int64_t>());
    } else if (node->is_floating_point()) {
      out = *node->value<double>();
    } else {
      throw ConfigError(Where(name_, key) + " must be a number");
    }
  }

  void Integer(std::string_view key, std::int64_t& out) {
    const toml::node* node = Find(key);
    if (!node) return;
    if (!node->is_integer()) throw ConfigError(Where(name_, key) + " must be an integer");
    out = *node->value<std::int64_t>();
  }

  void Integer(std::string_view key, int& out) {
    std::int64_t v = out;
    Integer(key, v);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(Where(name_, key) + " is out of range");
    }
    out = static_cast<int>(v);
  }

  void Seed(std::string_view key, std::uint64_t& out) {
    std::int64_t v = static_cast<std::int64_t>(out);
    Integer(key, v);
    if (v < 0) throw ConfigError(Where(name_, key) + " must be nonnegative");
    out = static_cast<std::uint64_t>(v);
  }

  std::optional<std::string> Text(std::string_view key) {
    const toml::node* node = Find(key);
    if (!node) return std::nullopt;
    if (!node->is_string()) throw ConfigError(Where(name_, key) + " must be a string");
    return *node->value<std::string>();
  }

  std::optional<std::vector<double>> Reals(std::string_view key) {
    const toml::node* node = Find(key);
    if (!node) return std::nullopt;
    const toml::array* arr = node->as_array();
    if (!arr) throw ConfigError(Where(name_, key) + " must be an array of numbers");
    std::vector<double> out;
    for (const toml::node& item : *arr) {
      if (item.is_integer()) {
        out.push_back(static_cast<double>(*item.value<std::int64_t>()));
      } else if (item.is_floating_point()) {
        out.push_back(*item.value<double>());
      } else {
        throw ConfigError(Where(name_, key) + " must contain only numbers");
      }
    }
    return out;
  }

  void Pair(std::string_view key, std::array<double, 2>& out) {
    auto v = Reals(key);
    if (!v) return;
    if (v->size() != 2) throw ConfigError(Where(name_, key) + " must have two entries");
    out = {(*v)[0], (*v)[1]};
  }

  void Finish() const {
    if (!table_) return;
    for (auto&& [key, node] : *table_) {
      (void)node;
      if (!used_.count(std::string(key.str()))) {
        throw ConfigError("unknown key " + Where(name_, key.str()));
      }
    }
  }

 private:
  const toml::node* Find(std::string_view key) {
    if (!table_) return nullptr;
    const toml::node* node = table_->get(key);
    if (node) used_.insert(std::string(key));
    return node;
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

template <typename Enum, std::size_t N>
Enum ParseEnum(std::string_view what, std::string_view name,
               const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [text, value] : table) {
    if (text == name) return value;
  }
  std::string msg = "unknown " + std::string(what) + " '" + std::string(name) + "' (expected";
  for (const auto& [text, value] : table) {
    (void)value;
    msg += " " + std::string(text);
  }
  throw ConfigError(msg + ")");
}

constexpr std::array<std::pair<std::string_view, PlantFidelity>, 2> kPlantNames{{
    {"linear", PlantFidelity::kLinear}, {"nonlinear", PlantFidelity::kNonlinear}}};
constexpr std::array<std::pair<std::string_view, WeightInitMode>, 2> kInitNames{{
    {"uniform", WeightInitMode::kUniform}, {"truncated_normal", WeightInitMode::kTruncatedNormal}}};
constexpr std::array<std::pair<std::string_view, LayoutKind>, 2> kLayoutNames{{
    {"full", LayoutKind::kFull}, {"sparse", LayoutKind::kSparse}}};
constexpr std::array<std::pair<std::string_view, ObserverMode>, 2> kModeNames{{
    {"rhso", ObserverMode::kRhso}, {"hso", ObserverMode::kHso}}};
constexpr std::array<std::pair<std::string_view, InitialStateMode>, 2> kStateModeNames{{
    {"random_hover", InitialStateMode::kRandomHover}, {"explicit", InitialStateMode::kExplicit}}};
constexpr std::array<std::pair<std::string_view, AutopilotVariant>, 2> kAutopilotNames{{
    {"linearized", AutopilotVariant::kLinearized}, {"full_arctan", AutopilotVariant::kFullArctan}}};

template <typename Enum, std::size_t N>
std::string_view NameOf(Enum v, const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [text, value] : table) {
    if (value == v) return text;
  }
  return "?";
}

const toml::table* SubTable(const toml::table& root, std::string_view name) {
  const toml::node* node = root.get(name);
  if (!node) return nullptr;
  const toml::table* t = node->as_table();
  if (!t) throw ConfigError("[" + std::string(name) + "] must be a table");
  return t;
}

Eigen::VectorXd ToVector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool IsMultiple(double interval, double dt) {
  const double ratio = interval / dt;
  return ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio;
}

std::string List(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += FormatNumber(v(i));
  }
  return out + "]";
}

std::string List(const std::array<double, 2>& v) {
  return "[" + FormatNumber(v[0]) + ", " + FormatNumber(v[1]) + "]";
}

}  // namespace

CostFunctional CostSpec::Build() const {
  return CostFunctional::Diagonal(q_diag, r_diag);
}

int SimConfig::StepsPerSample(double sample_interval) const {
  return static_cast<int>(std::lround(sample_interval / dt));
}

int SimConfig::TotalSteps() const { return static_cast<int>(std::lround(horizon / dt)); }

ExperimentConfig ExperimentConfig::Defaults() {
  ExperimentConfig cfg;
  const CostFunctional base = MakeDefaultCost();
  cfg.cost.q_diag = base.q().diagonal();
  cfg.cost.r_diag = base.r().diagonal();
  return cfg;
}

ExperimentConfig ExperimentConfig::FromTomlString(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error: " << e.description() << " at " << e.source().begin;
    throw ConfigError(msg.str());
  }

  static const std::set<std::string> kSections{"quad", "cost", "excitation", "observer",
                                               "sim", "experiment"};
  for (auto&& [key, node] : root) {
    (void)node;
    if (!kSections.count(std::string(key.str()))) {
      throw ConfigError("unknown section [" + std::string(key.str()) + "]");
    }
  }

  ExperimentConfig cfg = Defaults();

  Section quad(SubTable(root, "quad"), "quad");
  QuadParams& q = cfg.quad;
  quad.Real("mass", q.mass);
  quad.Real("arm_length", q.arm_length);
  quad.Real("i_xx", q.i_xx);
  quad.Real("i_yy", q.i_yy);
  quad.Real("i_zz", q.i_zz);
  quad.Real("k_t", q.k_t);
  quad.Real("g", q.g);
  quad.Real("kp11", q.kp11);
  quad.Real("kp12", q.kp12);
  quad.Real("kp13", q.kp13);
  quad.Real("kp21", q.kp21);
  quad.Real("kp22", q.kp22);
  quad.Real("kp23", q.kp23);
  quad.Real("kd1", q.kd1);
  quad.Real("kd2", q.kd2);
  quad.Real("kd3", q.kd3);
  quad.Finish();

  Section cost(SubTable(root, "cost"), "cost");
  if (auto v = cost.Reals("q_diag")) cfg.cost.q_diag = ToVector(*v);
  if (auto v = cost.Reals("r_diag")) cfg.cost.r_diag = ToVector(*v);
  cost.Finish();

  Section exc(SubTable(root, "excitation"), "excitation");
  exc.Integer("num_sets", cfg.excitation.num_sets);
  exc.Integer("sines_per_set", cfg.excitation.sines_per_set);
  exc.Real("f_min", cfg.excitation.f_min);
  exc.Real("f_max", cfg.excitation.f_max);
  exc.Real("magnitude", cfg.excitation.magnitude);
  exc.Seed("phase_seed", cfg.excitation.phase_seed);
  exc.Finish();

  Section obs(SubTable(root, "observer"), "observer");
  ObserverConfig& o = cfg.observer;
  obs.Real("epsilon", o.epsilon);
  obs.Integer("stack_capacity", o.stack_capacity);
  obs.Real("sample_interval", o.sample_interval);
  if (auto v = obs.Text("init_mode")) o.init_mode = ParseEnum("init_mode", *v, kInitNames);
  obs.Pair("init_range", o.init_range);
  if (auto v = obs.Text("layout")) o.layout = ParseLayoutKind(*v);
  if (auto v = obs.Text("mode")) o.mode = ParseObserverMode(*v);
  double eps_fi = o.EffectiveEpsilonFi();
  obs.Real("epsilon_fi", eps_fi);
  if (eps_fi != o.epsilon) o.epsilon_fi = eps_fi;
  obs.Finish();

  Section sim(SubTable(root, "sim"), "sim");
  SimConfig& s = cfg.sim;
  sim.Real("dt", s.dt);
  sim.Real("horizon", s.horizon);
  if (auto v = sim.Text("initial_state_mode")) {
    s.initial_state_mode = ParseEnum("initial_state_mode", *v, kStateModeNames);
  }
  sim.Pair("hover_box_x", s.hover_box.x);
  sim.Pair("hover_box_y", s.hover_box.y);
  sim.Real("z_offset", s.z_offset);
  if (auto v = sim.Text("plant")) s.plant = ParseEnum("plant", *v, kPlantNames);
  if (auto v = sim.Text("autopilot")) s.autopilot = ParseEnum("autopilot", *v, kAutopilotNames);
  if (auto v = sim.Reals("initial_state")) {
    if (v->size() != static_cast<std::size_t>(kQuadStates)) {
      throw ConfigError("sim.initial_state must have 12 entries");
    }
    s.initial_state = Eigen::Map<const QuadState>(v->data());
  }
  sim.Finish();

  Section exp(SubTable(root, "experiment"), "experiment");
  exp.Integer("trials", cfg.trials);
  exp.Seed("master_seed", cfg.master_seed);
  exp.Finish();

  cfg.Validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::FromTomlFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return FromTomlString(buf.str());
}

void ExperimentConfig::Validate() const {
  try {
    quad.Validate();
    excitation.Validate();
    if (cost.q_diag.size() != kQuadStates) throw ConfigError("cost.q_diag must have 12 entries");
    if (cost.r_diag.size() != kQuadInputs) throw ConfigError("cost.r_diag must have 4 entries");
    (void)cost.Build();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!(cost.r_diag(0) > 0.0)) throw ConfigError("cost.r_diag[0] anchors the scale and must be > 0");

  if (!(observer.epsilon >= 0.0)) throw ConfigError("observer.epsilon must be >= 0");
  if (observer.mode == ObserverMode::kRhso && !(observer.epsilon > 0.0)) {
    throw ConfigError("observer.epsilon must be > 0 in rhso mode");
  }
  if (observer.epsilon_fi && !(*observer.epsilon_fi > 0.0)) {
    throw ConfigError("observer.epsilon_fi must be > 0");
  }
  if (observer.stack_capacity < 1) throw ConfigError("observer.stack_capacity must be >= 1");
  if (!(observer.init_range[0] < observer.init_range[1])) {
    throw ConfigError("observer.init_range must be increasing");
  }

  if (!(sim.dt > 0.0) || !std::isfinite(sim.dt)) throw ConfigError("sim.dt must be > 0");
  if (!(sim.horizon > 0.0) || !std::isfinite(sim.horizon)) {
    throw ConfigError("sim.horizon must be > 0");
  }
  if (!(observer.sample_interval > 0.0) || !IsMultiple(observer.sample_interval, sim.dt)) {
    throw ConfigError("observer.sample_interval must be a positive integer multiple of sim.dt");
  }
  if (!IsMultiple(sim.horizon, sim.dt)) {
    throw ConfigError("sim.horizon must be an integer multiple of sim.dt");
  }
  if (!(sim.hover_box.x[0] <= sim.hover_box.x[1]) || !(sim.hover_box.y[0] <= sim.hover_box.y[1])) {
    throw ConfigError("sim.hover_box bounds must be ordered");
  }
  if (!std::isfinite(sim.z_offset)) throw ConfigError("sim.z_offset must be finite");
  if (!sim.initial_state.allFinite()) throw ConfigError("sim.initial_state must be finite");
  if (trials < 1) throw ConfigError("experiment.trials must be >= 1");
  if (master_seed > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw ConfigError("experiment.master_seed must fit in a signed 64-bit integer");
  }
}

WeightLayout ExperimentConfig::Layout() const {
  if (observer.layout == LayoutKind::kFull) return WeightLayout::Full(kQuadStates, kQuadInputs);
  const CostFunctional c = cost.Build();
  return WeightLayout::FromMasks(c.q_mask(), c.r_mask());
}

std::string_view ToString(PlantFidelity v) { return NameOf(v, kPlantNames); }
std::string_view ToString(WeightInitMode v) { return NameOf(v, kInitNames); }
std::string_view ToString(LayoutKind v) { return NameOf(v, kLayoutNames); }
std::string_view ToString(ObserverMode v) { return NameOf(v, kModeNames); }
std::string_view ToString(InitialStateMode v) { return NameOf(v, kStateModeNames); }
std::string_view ToString(AutopilotVariant v) { return NameOf(v, kAutopilotNames); }

ObserverMode ParseObserverMode(std::string_view name) {
  return ParseEnum("observer mode", name, kModeNames);
}

LayoutKind ParseLayoutKind(std::string_view name) {
  return ParseEnum("layout", name, kLayoutNames);
}

std::string ToToml(const ExperimentConfig& cfg) {
  const auto num = [](double v) { return FormatNumber(v); };
  const auto str = [](std::string_view v) { return "\"" + std::string(v) + "\""; };
  std::ostringstream os;
  const QuadParams& q = cfg.quad;
  os << "[quad]\n"
     << "mass = " << num(q.mass) << "\n"
     << "arm_length = " << num(q.arm_length) << "\n"
     << "i_xx = " << num(q.i_xx) << "\n"
     << "i_yy = " << num(q.i_yy) << "\n"
     << "i_zz = " << num(q.i_zz) << "\n"
     << "k_t = " << num(q.k_t) << "\n"
     << "g = " << num(q.g) << "\n"
     << "kp11 = " << num(q.kp11) << "\n"
     << "kp12 = " << num(q.kp12) << "\n"
     << "kp13 = " << num(q.kp13) << "\n"
     << "kp21 = " << num(q.kp21) << "\n"
     << "kp22 = " << num(q.kp22) << "\n"
     << "kp23 = " << num(q.kp23) << "\n"
     << "kd1 = " << num(q.kd1) << "\n"
     << "kd2 = " << num(q.kd2) << "\n"
     << "kd3 = " << num(q.kd3) << "\n\n";
  os << "[cost]\n"
     << "q_diag = " << List(cfg.cost.q_diag) << "\n"
     << "r_diag = " << List(cfg.cost.r_diag) << "\n\n";
  const ExcitationConfig& e = cfg.excitation;
  os << "[excitation]\n"
     << "num_sets = " << e.num_sets << "\n"
     << "sines_per_set = " << e.sines_per_set << "\n"
     << "f_min = " << num(e.f_min) << "\n"
     << "f_max = " << num(e.f_max) << "\n"
     << "magnitude = " << num(e.magnitude) << "\n"
     << "phase_seed = " << e.phase_seed << "\n\n";
  const ObserverConfig& o = cfg.observer;
  os << "[observer]\n"
     << "epsilon = " << num(o.epsilon) << "\n"
     << "epsilon_fi = " << num(o.EffectiveEpsilonFi()) << "\n"
     << "stack_capacity = " << o.stack_capacity << "\n"
     << "sample_interval = " << num(o.sample_interval) << "\n"
     << "init_mode = " << str(ToString(o.init_mode)) << "\n"
     << "init_range = " << List(o.init_range) << "\n"
     << "layout = " << str(ToString(o.layout)) << "\n"
     << "mode = " << str(ToString(o.mode)) << "\n\n";
  const SimConfig& s = cfg.sim;
  os << "[sim]\n"
     << "dt = " << num(s.dt) << "\n"
     << "horizon = " << num(s.horizon) << "\n"
     << "initial_state_mode = " << str(ToString(s.initial_state_mode)) << "\n"
     << "hover_box_x = " << List(s.hover_box.x) << "\n"
     << "hover_box_y = " << List(s.hover_box.y) << "\n"
     << "z_offset = " << num(s.z_offset) << "\n"
     << "plant = " << str(ToString(s.plant)) << "\n"
     << "autopilot = " << str(ToString(s.autopilot)) << "\n"
     << "initial_state = " << List(Eigen::VectorXd(s.initial_state)) << "\n\n";
  os << "[experiment]\n"
     << "trials = " << cfg.trials << "\n"
     << "master_seed = " << cfg.master_seed << "\n";
  return os.str();
}

}  // namespace irlpilot
