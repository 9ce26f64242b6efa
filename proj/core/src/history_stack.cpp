#include "irlpilot/history_stack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "irlpilot/csv.hpp"

namespace irlpilot {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Ritz vectors taken from each end of the spectrum for candidate bounds.
constexpr Eigen::Index kRitzVectors = 4;
// Prune only when the bound clears the incumbent by more than roundoff.
constexpr double kBoundSlack = 1e-10;
constexpr double kRangeTolerance = 1e-8;

double ConditionFromEigenvalues(double lambda_min, double lambda_max, double epsilon) {
  const double lo = lambda_min + epsilon;
  if (!(lo > 0.0)) return kInf;
  return (lambda_max + epsilon) / lo;
}

// Rayleigh-Ritz estimate of an extreme eigenvalue of G - gram_out + gram_in on
// span(basis). With the basis made of eigenvectors of G this is exact for G,
// and it bounds the perturbed extreme eigenvalue from the inside.
double RitzExtreme(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& basis,
                   const Eigen::MatrixXd& rows_out, const Eigen::MatrixXd& rows_in,
                   bool largest) {
  const Eigen::MatrixXd out_proj = rows_out * basis;
  const Eigen::MatrixXd in_proj = rows_in * basis;
  Eigen::MatrixXd h = lambdas.asDiagonal();
  h.noalias() -= out_proj.transpose() * out_proj;
  h.noalias() += in_proj.transpose() * in_proj;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  return largest ? eig.eigenvalues().maxCoeff() : eig.eigenvalues().minCoeff();
}

}  // namespace

StackSlot MakeSlot(const LinearSystem& system, const WeightLayout& layout, double t,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  StackSlot slot;
  slot.t = t;
  slot.x = x;
  slot.u = u;
  const Eigen::Index m = layout.m();
  slot.rows.resize(1 + m, layout.total_dim());
  slot.rows.row(0) = SigmaDeltaRow(system, layout, x, u);
  slot.rows.bottomRows(m) = SigmaDeltaUBlock(system, layout, x, u);
  slot.targets = Eigen::VectorXd::Zero(1 + m);
  slot.targets(0) = -u(0) * u(0) * WeightVector::kR1;
  slot.targets(1) = -2.0 * u(0) * WeightVector::kR1;
  slot.gram = slot.rows.transpose() * slot.rows;
  slot.gram_rhs = slot.rows.transpose() * slot.targets;
  return slot;
}

double RegularizedConditionNumber(const Eigen::MatrixXd& gram, double epsilon) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  return ConditionFromEigenvalues(ev(0), ev(ev.size() - 1), epsilon);
}

HistoryStack::HistoryStack(LinearSystem system, WeightLayout layout, int capacity,
                           double epsilon)
    : system_(std::move(system)),
      layout_(std::move(layout)),
      capacity_(capacity),
      epsilon_(epsilon) {
  if (capacity_ < 1) throw ConfigError("history stack capacity must be at least 1");
  if (!(epsilon_ >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  if (layout_.n() != system_.n() || layout_.m() != system_.m()) {
    throw DimensionMismatch("weight layout does not match the system");
  }
  slots_.reserve(capacity_);
  Rebuild();
}

bool HistoryStack::Record(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (last_t_ && !(t > *last_t_)) {
    throw std::invalid_argument("history stack samples must arrive in time order");
  }
  last_t_ = t;
  StackSlot candidate = MakeSlot(system_, layout_, t, x, u);
  if (!full()) {
    slots_.push_back(std::move(candidate));
    Rebuild();
    return true;
  }
  return TryReplace(std::move(candidate));
}

Eigen::MatrixXd HistoryStack::GramWithReplacement(int slot,
                                                  const StackSlot& candidate) const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(layout_.total_dim(), layout_.total_dim());
  for (int i = 0; i < size(); ++i) g += (i == slot) ? candidate.gram : slots_[i].gram;
  return g;
}

const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& HistoryStack::CurrentEigen() {
  if (!eigen_) eigen_.emplace(gram_);
  return *eigen_;
}

// Exhaustive argmin over the N possible replacements, evaluated lazily: each
// candidate first gets a cheap lower bound on its condition number from
// Rayleigh-Ritz estimates on the current extreme eigenvectors, and exact
// eigenvalues are computed only while a bound can still beat the incumbent.
bool HistoryStack::TryReplace(StackSlot candidate) {
  const auto& eig = CurrentEigen();
  const Eigen::Index d = layout_.total_dim();
  const Eigen::Index k = std::min(kRitzVectors, d);
  const Eigen::MatrixXd bottom = eig.eigenvectors().leftCols(k);
  const Eigen::MatrixXd top = eig.eigenvectors().rightCols(k);
  const Eigen::VectorXd bottom_vals = eig.eigenvalues().head(k);
  const Eigen::VectorXd top_vals = eig.eigenvalues().tail(k);

  std::vector<std::pair<double, int>> order;
  order.reserve(slots_.size());
  for (int i = 0; i < size(); ++i) {
    const double hi = RitzExtreme(top_vals, top, slots_[i].rows, candidate.rows, true);
    const double lo = RitzExtreme(bottom_vals, bottom, slots_[i].rows, candidate.rows, false);
    const double denom = lo + epsilon_;
    const double bound = denom > 0.0 ? (hi + epsilon_) / denom : 0.0;
    order.emplace_back(bound, i);
  }
  std::sort(order.begin(), order.end());

  double best = condition_;
  int best_slot = -1;
  for (const auto& [bound, i] : order) {
    if (std::isfinite(best) && bound * (1.0 - kBoundSlack) > best) break;
    const double c = RegularizedConditionNumber(GramWithReplacement(i, candidate), epsilon_);
    if (c < best || (c == best && best_slot >= 0 && i < best_slot)) {
      best = c;
      best_slot = i;
    }
  }
  if (best_slot < 0) return false;

  // Rebuild sums the slot Gram matrices in the same order as
  // GramWithReplacement, so the stored condition number equals `best` exactly.
  slots_[best_slot] = std::move(candidate);
  ++replacements_;
  Rebuild();
  return true;
}

void HistoryStack::Rebuild() {
  const Eigen::Index d = layout_.total_dim();
  const Eigen::Index r = rows_per_slot();
  sigma_.resize(r * size(), d);
  sigma_u_.resize(r * size());
  gram_ = Eigen::MatrixXd::Zero(d, d);
  gram_rhs_ = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < size(); ++i) {
    sigma_.middleRows(r * i, r) = slots_[i].rows;
    sigma_u_.segment(r * i, r) = slots_[i].targets;
    gram_ += slots_[i].gram;
    gram_rhs_ += slots_[i].gram_rhs;
  }
  condition_ = RegularizedConditionNumber(gram_, epsilon_);
  eigen_.reset();
  ++version_;
}

void HistoryStack::WriteCsv(std::ostream& os) const {
  CsvWriter csv(os);
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < layout_.n(); ++i) header.push_back("x" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < layout_.m(); ++i) header.push_back("u" + std::to_string(i + 1));
  csv.Header(header);
  for (const auto& s : slots_) {
    csv << s.t;
    for (double v : s.x) csv << v;
    for (double v : s.u) csv << v;
    csv.EndRow();
  }
}

InformativityReport Informativity(const HistoryStack& stack, double epsilon_fi) {
  if (stack.empty()) throw std::invalid_argument("informativity needs a non-empty stack");
  const Eigen::Index n = stack.layout().n();
  const int count = stack.size();
  Eigen::MatrixXd x(n, count);
  Eigen::MatrixXd z(SymDim(n), count);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd& xi = stack.slots()[i].x;
    x.col(i) = xi;
    z.col(i) = Uvec(xi * xi.transpose());
  }

  InformativityReport rep;
  rep.state_rank = NumericalRank(x);
  rep.state_span = rep.state_rank == n;
  rep.sym_rank = NumericalRank(z);
  rep.sym_span = rep.sym_rank == SymDim(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> xx(x * x.transpose(), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> zz(z * z.transpose(), Eigen::EigenvaluesOnly);
  rep.min_eig_state = xx.eigenvalues()(0);
  rep.min_eig_sym = zz.eigenvalues()(0);
  rep.eps_state = rep.min_eig_state > epsilon_fi;
  rep.eps_sym = rep.min_eig_sym > epsilon_fi;

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stack.sigma());
  const Eigen::VectorXd w = qr.solve(stack.sigma_u());
  rep.range_residual = (stack.sigma() * w - stack.sigma_u()).norm();
  const double target = stack.sigma_u().norm();
  rep.range_ok = rep.range_residual <= kRangeTolerance * target || rep.range_residual == 0.0;
  return rep;
}

}  // namespace irlpilot
