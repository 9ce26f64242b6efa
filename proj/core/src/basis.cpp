#include "irlpilot/basis.hpp"

#include <algorithm>
#include <string>

namespace irlpilot {
namespace {

void CheckIndices(const std::vector<Eigen::Index>& idx, Eigen::Index lo,
                  Eigen::Index hi, const char* what) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < lo || idx[k] >= hi || (k > 0 && idx[k] <= idx[k - 1])) {
      throw Error(std::string(what) + " indices must be strictly increasing and in range");
    }
  }
}

// dSigmaQuad(x) * v, i.e. the gradient of the quadratic basis contracted with
// a direction, without materializing the SymDim(n) x n Jacobian.
Eigen::VectorXd GradTimes(const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd out(SymDim(n));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out(k++) = 2.0 * x(i) * v(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(k++) = 2.0 * (x(j) * v(i) + x(i) * v(j));
    }
  }
  return out;
}

}  // namespace

Eigen::Index UvecIndex(Eigen::Index i, Eigen::Index j, Eigen::Index n) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

Eigen::VectorXd Uvec(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd out(SymDim(n));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) out(k++) = m(i, j);
  }
  return out;
}

Eigen::MatrixXd FromUvec(const Eigen::VectorXd& v, Eigen::Index n) {
  if (v.size() != SymDim(n)) throw DimensionMismatch("uvec length does not match n");
  Eigen::MatrixXd m(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  }
  return m;
}

Eigen::VectorXd SigmaQuad(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd out(SymDim(n));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out(k++) = x(i) * x(i);
    for (Eigen::Index j = i + 1; j < n; ++j) out(k++) = 2.0 * x(i) * x(j);
  }
  return out;
}

Eigen::MatrixXd OuterFromSigmaQuad(const Eigen::VectorXd& sigma, Eigen::Index n) {
  Eigen::MatrixXd m = FromUvec(sigma, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) m(i, j) *= 0.5;
    }
  }
  return m;
}

Eigen::MatrixXd GradSigmaQuad(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(SymDim(n), n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out(k++, i) = 2.0 * x(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(k, i) = 2.0 * x(j);
      out(k, j) = 2.0 * x(i);
      ++k;
    }
  }
  return out;
}

Eigen::MatrixXd SigmaR2(const Eigen::VectorXd& u) {
  const Eigen::Index m = u.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, SymDim(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) out(i, UvecIndex(i, j, m)) += u(j);
  }
  return out;
}

WeightLayout WeightLayout::Full(Eigen::Index n, Eigen::Index m) {
  std::vector<Eigen::Index> q(SymDim(n));
  for (Eigen::Index k = 0; k < SymDim(n); ++k) q[k] = k;
  std::vector<Eigen::Index> r;
  for (Eigen::Index k = 1; k < SymDim(m); ++k) r.push_back(k);
  return WeightLayout(n, m, std::move(q), std::move(r));
}

WeightLayout WeightLayout::FromMasks(const BoolMatrix& q_mask, const BoolMatrix& r_mask) {
  const Eigen::Index n = q_mask.rows();
  const Eigen::Index m = r_mask.rows();
  if (m < 1 || !r_mask(0, 0)) {
    throw Error("R(0,0) anchors the scale and must be inside the R mask");
  }
  std::vector<Eigen::Index> q;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      if (q_mask(i, j)) q.push_back(UvecIndex(i, j, n));
    }
  }
  std::vector<Eigen::Index> r;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      const Eigen::Index k = UvecIndex(i, j, m);
      if (k > 0 && r_mask(i, j)) r.push_back(k);
    }
  }
  return WeightLayout(n, m, std::move(q), std::move(r));
}

WeightLayout::WeightLayout(Eigen::Index n, Eigen::Index m,
                           std::vector<Eigen::Index> q_indices,
                           std::vector<Eigen::Index> r_indices)
    : n_(n), m_(m), q_indices_(std::move(q_indices)), r_indices_(std::move(r_indices)) {
  if (n < 1 || m < 1) throw DimensionMismatch("layout dimensions must be positive");
  CheckIndices(q_indices_, 0, SymDim(n), "Q");
  CheckIndices(r_indices_, 1, SymDim(m), "R");
}

WeightVector WeightVector::Zero(const WeightLayout& layout) {
  return WeightVector{Eigen::VectorXd::Zero(layout.s_dim()),
                      Eigen::VectorXd::Zero(layout.q_dim()),
                      Eigen::VectorXd::Zero(layout.r_dim())};
}

WeightVector WeightVector::Unpack(const WeightLayout& layout,
                                  const Eigen::VectorXd& packed) {
  if (packed.size() != layout.total_dim()) {
    throw DimensionMismatch("packed weight length does not match the layout");
  }
  return WeightVector{packed.head(layout.s_dim()),
                      packed.segment(layout.s_dim(), layout.q_dim()),
                      packed.tail(layout.r_dim())};
}

Eigen::VectorXd WeightVector::Packed() const {
  Eigen::VectorXd out(s.size() + q.size() + r_minus.size());
  out << s, q, r_minus;
  return out;
}

EstimatedCost ExtractMatrices(const WeightLayout& layout, const WeightVector& w) {
  if (w.s.size() != layout.s_dim() || w.q.size() != layout.q_dim() ||
      w.r_minus.size() != layout.r_dim()) {
    throw DimensionMismatch("weight vector does not match the layout");
  }
  EstimatedCost out;
  out.s_hat = FromUvec(w.s, layout.n());

  Eigen::VectorXd q_full = Eigen::VectorXd::Zero(layout.s_dim());
  for (Eigen::Index k = 0; k < layout.q_dim(); ++k) q_full(layout.q_indices()[k]) = w.q(k);
  out.q_hat = FromUvec(q_full, layout.n());

  Eigen::VectorXd r_full = Eigen::VectorXd::Zero(SymDim(layout.m()));
  r_full(0) = WeightVector::kR1;
  for (Eigen::Index k = 0; k < layout.r_dim(); ++k) {
    r_full(layout.r_indices()[k]) = w.r_minus(k);
  }
  out.r_hat = FromUvec(r_full, layout.m());
  return out;
}

EstimatedCost ExtractMatrices(const WeightLayout& layout, const Eigen::VectorXd& packed) {
  return ExtractMatrices(layout, WeightVector::Unpack(layout, packed));
}

WeightVector PackNormalized(const WeightLayout& layout, const Eigen::MatrixXd& s,
                            const Eigen::MatrixXd& q, const Eigen::MatrixXd& r) {
  if (s.rows() != layout.n() || q.rows() != layout.n() || r.rows() != layout.m()) {
    throw DimensionMismatch("matrices do not match the layout");
  }
  const double scale = r(0, 0);
  if (scale == 0.0) throw Error("R(0,0) must be nonzero to fix the scale");
  WeightVector w = WeightVector::Zero(layout);
  w.s = Uvec(s) / scale;
  const Eigen::VectorXd q_u = Uvec(q) / scale;
  for (Eigen::Index k = 0; k < layout.q_dim(); ++k) w.q(k) = q_u(layout.q_indices()[k]);
  const Eigen::VectorXd r_u = Uvec(r) / scale;
  for (Eigen::Index k = 0; k < layout.r_dim(); ++k) {
    w.r_minus(k) = r_u(layout.r_indices()[k]);
  }
  return w;
}

Eigen::RowVectorXd SigmaDeltaRow(const LinearSystem& system, const WeightLayout& layout,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() != system.n() || u.size() != system.m() || layout.n() != system.n() ||
      layout.m() != system.m()) {
    throw DimensionMismatch("regressor operands do not match the system");
  }
  Eigen::RowVectorXd row(layout.total_dim());
  const Eigen::VectorXd xdot = system.a() * x + system.b() * u;
  row.head(layout.s_dim()) = GradTimes(x, xdot).transpose();

  const Eigen::VectorXd sq = SigmaQuad(x);
  for (Eigen::Index k = 0; k < layout.q_dim(); ++k) {
    row(layout.s_dim() + k) = sq(layout.q_indices()[k]);
  }
  const Eigen::VectorXd sr = SigmaR1(u);
  for (Eigen::Index k = 0; k < layout.r_dim(); ++k) {
    row(layout.s_dim() + layout.q_dim() + k) = sr(layout.r_indices()[k]);
  }
  return row;
}

Eigen::MatrixXd SigmaDeltaUBlock(const LinearSystem& system, const WeightLayout& layout,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() != system.n() || u.size() != system.m() || layout.n() != system.n() ||
      layout.m() != system.m()) {
    throw DimensionMismatch("regressor operands do not match the system");
  }
  const Eigen::Index m = system.m();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m, layout.total_dim());
  for (Eigen::Index i = 0; i < m; ++i) {
    block.row(i).head(layout.s_dim()) = GradTimes(x, system.b().col(i)).transpose();
  }
  const Eigen::MatrixXd r2 = SigmaR2(u);
  const Eigen::Index offset = layout.s_dim() + layout.q_dim();
  for (Eigen::Index k = 0; k < layout.r_dim(); ++k) {
    block.col(offset + k) = 2.0 * r2.col(layout.r_indices()[k]);
  }
  return block;
}

}  // namespace irlpilot
