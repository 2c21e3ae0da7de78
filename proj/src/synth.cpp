#include "evolal/synth.hpp"

#include "evolal/error.hpp"
#include "evolal/policynet.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace evolal {

void EmitterConfig::validate() const {
  if (students < 1 || steps < 1) throw ConfigError("emitter needs at least one student and one step");
  if (regimes < 1 || intents < 1 || action_count < 1) throw ConfigError("emitter counts must be positive");
  if (dimension < std::max(1, regimes - 1)) throw ConfigError("feature dimension too small for the regime count");
  if (!(separation > 0.0)) throw ConfigError("regime separation must be positive");
  if (!(ar_coefficient > -1.0 && ar_coefficient < 1.0)) throw ConfigError("AR coefficient must lie in (-1, 1)");
  if (!(regime_switch_prob >= 0.0 && regime_switch_prob <= 1.0) ||
      !(intent_switch_prob >= 0.0 && intent_switch_prob <= 1.0))
    throw ConfigError("switch probabilities must lie in [0, 1]");
  for (int c : regime_change_points)
    if (c <= 0 || c >= steps) throw ConfigError("regime change points must lie in [1, steps)");
  for (int c : intent_change_points)
    if (c <= 0 || c >= steps) throw ConfigError("intent change points must lie in [1, steps)");
  if (!intent_prior.empty()) {
    if (static_cast<int>(intent_prior.size()) != intents) throw ConfigError("intent prior has the wrong length");
    double s = 0.0;
    for (double p : intent_prior) {
      if (!(p >= 0.0)) throw ConfigError("intent prior entries must be nonnegative");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("intent prior must sum to 1");
  }
  if (!action_table.empty()) {
    if (static_cast<int>(action_table.size()) != intents) throw ConfigError("action table needs one matrix per intent");
    for (const auto& m : action_table) {
      if (m.rows() != regimes || m.cols() != action_count) throw ConfigError("action table matrix has the wrong shape");
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        if ((m.row(r).array() < 0.0).any() || std::abs(m.row(r).sum() - 1.0) > 1e-9)
          throw ConfigError("action table rows must be distributions");
    }
  } else if (!(action_fidelity >= 0.0 && action_fidelity <= 1.0)) {
    throw ConfigError("action fidelity must lie in [0, 1]");
  }
  if (!(time_step > 0.0)) throw ConfigError("time step must be positive");
  if (semesters.empty()) throw ConfigError("at least one semester tag is required");
}

std::vector<int> EmitterTruth::initial_intents() const {
  std::vector<int> out;
  for (const auto& i : intents) out.push_back(i.empty() ? 0 : i.front());
  return out;
}

Dataset EmitterData::dataset(int action_count) const { return to_dataset(records, action_count); }

namespace {

// Regular simplex with pairwise distance `sep`, randomly rotated into R^m.
std::vector<Vector> simplex_means(int q, int m, double sep, std::mt19937_64& rng) {
  std::vector<Vector> means(static_cast<std::size_t>(q), Vector::Zero(m));
  if (q == 1) return means;
  Matrix e = Matrix::Identity(q, q) * (sep / std::sqrt(2.0));
  e.rowwise() -= e.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(e, Eigen::ComputeThinU);
  const Matrix coords = svd.matrixU().leftCols(q - 1) * svd.singularValues().head(q - 1).asDiagonal();
  std::normal_distribution<double> n;
  Matrix g(m, q - 1);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = n(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix basis = qr.householderQ() * Matrix::Identity(m, q - 1);
  for (int k = 0; k < q; ++k) means[static_cast<std::size_t>(k)] = basis * coords.row(k).transpose();
  return means;
}

int sample_row(const Matrix& m, Eigen::Index r, std::mt19937_64& rng) {
  std::vector<double> w(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) w[static_cast<std::size_t>(k)] = m(r, k);
  return std::discrete_distribution<int>(w.begin(), w.end())(rng);
}

int other_than(int current, int count, std::mt19937_64& rng) {
  if (count <= 1) return current;
  int v = std::uniform_int_distribution<int>(0, count - 2)(rng);
  return v >= current ? v + 1 : v;
}

}  // namespace

EmitterData gen_emitter(const EmitterConfig& cfg) {
  cfg.validate();
  std::mt19937_64 mean_rng(derive_seed(cfg.seed, 100));
  EmitterData out;
  out.truth.means = simplex_means(cfg.regimes, cfg.dimension, cfg.separation, mean_rng);

  std::vector<Matrix> table = cfg.action_table;
  if (table.empty()) {
    const double rest = cfg.action_count > 1 ? (1.0 - cfg.action_fidelity) / (cfg.action_count - 1) : 0.0;
    for (int c = 0; c < cfg.intents; ++c) {
      Matrix m = Matrix::Constant(cfg.regimes, cfg.action_count, rest);
      for (int z = 0; z < cfg.regimes; ++z) m(z, (c + z) % cfg.action_count) = cfg.action_count > 1 ? cfg.action_fidelity : 1.0;
      table.push_back(std::move(m));
    }
  }
  std::vector<double> prior = cfg.intent_prior;
  if (prior.empty()) prior.assign(static_cast<std::size_t>(cfg.intents), 1.0 / cfg.intents);
  std::vector<bool> regime_cp(static_cast<std::size_t>(cfg.steps), false), intent_cp(static_cast<std::size_t>(cfg.steps), false);
  for (int c : cfg.regime_change_points) regime_cp[static_cast<std::size_t>(c)] = true;
  for (int c : cfg.intent_change_points) intent_cp[static_cast<std::size_t>(c)] = true;
  const double innov = std::sqrt(1.0 - cfg.ar_coefficient * cfg.ar_coefficient);

  for (int j = 0; j < cfg.students; ++j) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 200, static_cast<uint64_t>(j)));
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    StudentRecord rec;
    rec.id = "s" + std::to_string(j);
    rec.semester = cfg.semesters[static_cast<std::size_t>(j) % cfg.semesters.size()];
    rec.pre = 10.0 + 80.0 * u(rng);
    rec.post = std::clamp(rec.pre + 10.0 + 15.0 * n(rng), 0.0, 100.0);
    rec.trajectory.id = rec.id;
    rec.trajectory.semester = rec.semester;
    rec.trajectory.scores = Scores{rec.pre, rec.post};

    std::vector<int> regimes, intents, cps;
    int z = std::uniform_int_distribution<int>(0, cfg.regimes - 1)(rng);
    int c = std::discrete_distribution<int>(prior.begin(), prior.end())(rng);
    Vector eps(cfg.dimension);
    for (auto& v : eps) v = n(rng);
    double time = 0.0;
    for (int t = 0; t < cfg.steps; ++t) {
      if (t > 0) {
        const bool change = cfg.regime_change_points.empty() ? u(rng) < cfg.regime_switch_prob : regime_cp[static_cast<std::size_t>(t)];
        if (change && cfg.regimes > 1) {
          z = other_than(z, cfg.regimes, rng);
          cps.push_back(t);
        }
        if (intent_cp[static_cast<std::size_t>(t)] && u(rng) < cfg.intent_switch_prob) c = other_than(c, cfg.intents, rng);
        for (auto& v : eps) v = cfg.ar_coefficient * v + innov * n(rng);
        time += cfg.time_step * (0.5 + u(rng));
      }
      const Matrix& dist = table[static_cast<std::size_t>(c)];
      Step st;
      st.state = out.truth.means[static_cast<std::size_t>(z)] + eps;
      st.action = sample_row(dist, z, rng);
      st.time = time;
      rec.trajectory.steps.push_back(std::move(st));
      regimes.push_back(z);
      intents.push_back(c);
    }
    out.truth.regimes.push_back(std::move(regimes));
    out.truth.intents.push_back(std::move(intents));
    out.truth.change_points.push_back(std::move(cps));
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::string truth_json(const EmitterTruth& truth) {
  nlohmann::json j;
  j["regimes"] = truth.regimes;
  j["intents"] = truth.intents;
  j["change_points"] = truth.change_points;
  return j.dump();
}

void write_truth(const std::filesystem::path& path, const EmitterTruth& truth) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path.string());
  out << truth_json(truth) << '\n';
}

void GridworldConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("grid dimensions must be positive");
  if (!cell_reward.empty() && static_cast<int>(cell_reward.size()) != width * height)
    throw ConfigError("cell rewards must cover the grid");
  if (!(beta > 0.0)) throw ConfigError("Boltzmann inverse temperature must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("discount must lie in [0, 1)");
  if (episodes < 1 || horizon < 1) throw ConfigError("episode count and horizon must be positive");
}

GridworldData gen_gridworld(const GridworldConfig& cfg) {
  cfg.validate();
  const int S = cfg.width * cfg.height, A = 4;
  std::vector<double> cell = cfg.cell_reward;
  if (cell.empty()) {
    cell.assign(static_cast<std::size_t>(S), -0.04);
    cell.back() = 1.0;
  }
  GridworldData g;
  g.mdp = HighLevelMDP{S, A, cfg.gamma, Matrix::Zero(S * A, S)};
  g.reward = Matrix(S, A);
  const int dx[] = {0, 0, -1, 1}, dy[] = {-1, 1, 0, 0};
  for (int s = 0; s < S; ++s) {
    const int x = s % cfg.width, y = s / cfg.width;
    for (int a = 0; a < A; ++a) {
      const int nx = x + dx[a], ny = y + dy[a];
      const bool inside = nx >= 0 && nx < cfg.width && ny >= 0 && ny < cfg.height;
      g.mdp.transitions(g.mdp.row(s, a), inside ? ny * cfg.width + nx : s) = 1.0;
      g.reward(s, a) = cell[static_cast<std::size_t>(s)];
    }
  }
  g.q = value_iteration(g.mdp, g.reward, 1e-13).q;
  g.demos = sample_boltzmann_demos(g.mdp, g.reward, cfg.beta, cfg.episodes * cfg.horizon, cfg.horizon, cfg.seed);
  return g;
}

TabularProblem random_tabular_mdp(int states, int actions, double gamma, uint64_t seed, double concentration) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gd(concentration, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TabularProblem p{HighLevelMDP{states, actions, gamma, Matrix(states * actions, states)}, Matrix(states, actions)};
  p.mdp.validate();
  for (Eigen::Index r = 0; r < p.mdp.transitions.rows(); ++r) {
    for (Eigen::Index c = 0; c < states; ++c) p.mdp.transitions(r, c) = gd(rng);
    p.mdp.transitions.row(r) /= p.mdp.transitions.row(r).sum();
  }
  for (Eigen::Index s = 0; s < states; ++s)
    for (Eigen::Index a = 0; a < actions; ++a) p.reward(s, a) = u(rng);
  return p;
}

std::vector<HighLevelDemo> sample_boltzmann_demos(const HighLevelMDP& mdp, const Matrix& reward, double beta,
                                                  int total_steps, int episode_length, uint64_t seed) {
  if (total_steps < 0 || episode_length < 1) throw ParameterError("invalid demo budget");
  const Matrix pi = boltzmann_policy(value_iteration(mdp, reward, 1e-13).q, beta);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> start(0, mdp.states - 1);
  std::vector<HighLevelDemo> demos;
  int remaining = total_steps;
  while (remaining > 0) {
    HighLevelDemo d;
    int s = start(rng);
    const int len = std::min(remaining, episode_length);
    for (int t = 0; t < len; ++t) {
      const int a = sample_row(pi, s, rng);
      d.push_back({s, a});
      s = sample_row(mdp.transitions, mdp.row(s, a), rng);
    }
    remaining -= len;
    demos.push_back(std::move(d));
  }
  return demos;
}

}  // namespace evolal
