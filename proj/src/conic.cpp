#include "pwacert/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pwacert/kernels.hpp"

namespace pwacert {
namespace conic {

int Cones::dim() const {
  int d = l;
  for (int k : s) d += svec_dim(k);
  return d;
}

int Cones::degree() const {
  int d = l;
  for (int k : s) d += k;
  return d;
}

int svec_index(int i, int j, int k) {
  if (i < j) std::swap(i, j);
  return j * k - j * (j - 1) / 2 + (i - j);
}

VectorXd svec(const MatrixXd& M) {
  const int k = static_cast<int>(M.rows());
  VectorXd v(svec_dim(k));
  const double r2 = std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < k; ++j)
    for (int i = j; i < k; ++i) v[idx++] = (i == j) ? M(i, j) : r2 * 0.5 * (M(i, j) + M(j, i));
  return v;
}

MatrixXd smat(const VectorXd& v, int k) {
  MatrixXd M(k, k);
  const double r2 = std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < k; ++j)
    for (int i = j; i < k; ++i) {
      const double e = (i == j) ? v[idx] : v[idx] / r2;
      M(i, j) = e;
      M(j, i) = e;
      ++idx;
    }
  return M;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical-failure";
  }
  return "numerical-failure";
}

double cone_margin(const VectorXd& v, const Cones& cones) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cones.l; ++i) m = std::min(m, v[i]);
  int off = cones.l;
  for (int k : cones.s) {
    if (k > 0) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(v.segment(off, svec_dim(k)), k), Eigen::EigenvaluesOnly);
      m = std::min(m, es.eigenvalues()[0]);
    }
    off += svec_dim(k);
  }
  return m;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool strictly_inside(const VectorXd& v, const Cones& cones) {
  for (int i = 0; i < cones.l; ++i)
    if (!(v[i] > 0.0)) return false;
  int off = cones.l;
  for (int k : cones.s) {
    if (k > 0) {
      Eigen::LLT<MatrixXd> llt(smat(v.segment(off, svec_dim(k)), k));
      if (llt.info() != Eigen::Success) return false;
    }
    off += svec_dim(k);
  }
  return true;
}

// NT scaling: orthant W = diag(w); PSD block W(Z) = R'ZR, W^{-T}(S) = R^{-1} S R^{-T}.
struct Scaling {
  VectorXd w;
  std::vector<MatrixXd> R;
  std::vector<MatrixXd> Rinv;
  VectorXd lambda;
};

struct Layout {
  std::vector<int> off;
  std::vector<int> loff;
};

Layout layout_of(const Cones& K) {
  Layout L;
  int off = K.l, loff = K.l;
  for (int k : K.s) {
    L.off.push_back(off);
    L.loff.push_back(loff);
    off += svec_dim(k);
    loff += k;
  }
  return L;
}

bool compute_scaling(const VectorXd& s, const VectorXd& z, const Cones& K, const Layout& L, Scaling& W) {
  W.w.resize(K.l);
  W.lambda.resize(K.degree());
  W.R.assign(K.s.size(), MatrixXd());
  W.Rinv.assign(K.s.size(), MatrixXd());
  for (int i = 0; i < K.l; ++i) {
    if (!(s[i] > 0.0) || !(z[i] > 0.0)) return false;
    W.w[i] = std::sqrt(s[i] / z[i]);
    W.lambda[i] = std::sqrt(s[i] * z[i]);
  }
  for (size_t c = 0; c < K.s.size(); ++c) {
    const int k = K.s[c];
    Eigen::LLT<MatrixXd> ls(smat(s.segment(L.off[c], svec_dim(k)), k));
    Eigen::LLT<MatrixXd> lz(smat(z.segment(L.off[c], svec_dim(k)), k));
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
    MatrixXd Ls = ls.matrixL();
    MatrixXd Lz = lz.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd lam = svd.singularValues();
    if (lam.minCoeff() <= 0.0) return false;
    VectorXd is = lam.cwiseSqrt().cwiseInverse();
    W.R[c] = Ls * svd.matrixV() * is.asDiagonal();
    W.Rinv[c] = is.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
    W.lambda.segment(L.loff[c], k) = lam;
  }
  return true;
}

enum class Op { WinvT, WT, W, Winv };

VectorXd apply(const Scaling& W, const Cones& K, const Layout& L, Op op, const VectorXd& v) {
  VectorXd out(v.size());
  for (int i = 0; i < K.l; ++i) out[i] = (op == Op::WT || op == Op::W) ? v[i] * W.w[i] : v[i] / W.w[i];
  for (size_t c = 0; c < K.s.size(); ++c) {
    const int k = K.s[c];
    MatrixXd V = smat(v.segment(L.off[c], svec_dim(k)), k);
    MatrixXd T;
    switch (op) {
      case Op::WinvT: T = W.Rinv[c] * V * W.Rinv[c].transpose(); break;
      case Op::WT: T = W.R[c] * V * W.R[c].transpose(); break;
      case Op::W: T = W.R[c].transpose() * V * W.R[c]; break;
      case Op::Winv: T = W.Rinv[c].transpose() * V * W.Rinv[c]; break;
    }
    out.segment(L.off[c], svec_dim(k)) = svec(T);
  }
  return out;
}

// lambda is stored compactly (diagonal per PSD block); expand to svec space.
VectorXd expand(const VectorXd& lam, const Cones& K, const Layout& L) {
  VectorXd out = VectorXd::Zero(K.dim());
  out.head(K.l) = lam.head(K.l);
  for (size_t c = 0; c < K.s.size(); ++c)
    for (int i = 0; i < K.s[c]; ++i) out[L.off[c] + svec_index(i, i, K.s[c])] = lam[L.loff[c] + i];
  return out;
}

VectorXd identity(const Cones& K, const Layout& L) {
  return expand(VectorXd::Ones(K.degree()), K, L);
}

// x with lambda o x = r
VectorXd lambda_solve(const VectorXd& lam, const VectorXd& r, const Cones& K, const Layout& L) {
  VectorXd out(r.size());
  for (int i = 0; i < K.l; ++i) out[i] = r[i] / lam[i];
  for (size_t c = 0; c < K.s.size(); ++c) {
    const int k = K.s[c];
    int idx = L.off[c];
    for (int j = 0; j < k; ++j)
      for (int i = j; i < k; ++i, ++idx)
        out[idx] = 2.0 * r[idx] / (lam[L.loff[c] + i] + lam[L.loff[c] + j]);
  }
  return out;
}

VectorXd jordan(const VectorXd& u, const VectorXd& v, const Cones& K, const Layout& L) {
  VectorXd out(u.size());
  for (int i = 0; i < K.l; ++i) out[i] = u[i] * v[i];
  for (size_t c = 0; c < K.s.size(); ++c) {
    const int k = K.s[c];
    MatrixXd U = smat(u.segment(L.off[c], svec_dim(k)), k);
    MatrixXd V = smat(v.segment(L.off[c], svec_dim(k)), k);
    out.segment(L.off[c], svec_dim(k)) = svec(0.5 * (U * V + V * U));
  }
  return out;
}

// Largest a with lam + a*d in K, where lam is the NT point.
double max_step(const VectorXd& lam, const VectorXd& d, const Cones& K, const Layout& L) {
  double a = kInf;
  for (int i = 0; i < K.l; ++i)
    if (d[i] < 0.0) a = std::min(a, -lam[i] / d[i]);
  for (size_t c = 0; c < K.s.size(); ++c) {
    const int k = K.s[c];
    VectorXd is = lam.segment(L.loff[c], k).cwiseSqrt().cwiseInverse();
    MatrixXd D = is.asDiagonal() * smat(d.segment(L.off[c], svec_dim(k)), k) * is.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(D, Eigen::EigenvaluesOnly);
    const double m = es.eigenvalues()[0];
    if (m < 0.0) a = std::min(a, -1.0 / m);
  }
  return a;
}

struct Ipm {
  const MatrixXd& G;
  const VectorXd& h;
  const VectorXd& c;
  const Cones& K;
  const Settings& opt;
  Layout L;

  Ipm(const MatrixXd& G_, const VectorXd& h_, const VectorXd& c_, const Cones& K_, const Settings& o)
      : G(G_), h(h_), c(c_), K(K_), opt(o), L(layout_of(K_)) {}

  MatrixXd scaled(const Scaling* W) const {
    MatrixXd Gh = G;
    if (!W) return Gh;
    for (int i = 0; i < K.l; ++i) Gh.row(i) /= W->w[i];
    for (size_t c = 0; c < K.s.size(); ++c) {
      if (opt.parallel)
        kernels::psd_congruence_parallel(Gh, L.off[c], W->Rinv[c]);
      else
        kernels::psd_congruence_serial(Gh, L.off[c], W->Rinv[c]);
    }
    return Gh;
  }

  Result run() {
    Result res;
    const int n = static_cast<int>(G.cols());
    const double nu = K.degree();
    const double nrmh = std::max(1.0, h.norm());
    const double nrmc = std::max(1.0, c.norm());
    const VectorXd e = identity(K, L);

    MatrixXd H = opt.parallel ? kernels::gram_parallel(G) : kernels::gram_serial(G);
    const double reg = 1e-13 * std::max(1.0, H.diagonal().maxCoeff());
    H.diagonal().array() += reg;
    Eigen::LLT<MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      res.message = "singular initial system";
      return res;
    }
    VectorXd x = llt.solve(G.transpose() * h);
    VectorXd s = h - G * x;
    VectorXd z = -G * llt.solve(c);
    auto shift = [&](VectorXd& v) {
      const double a = -cone_margin(v, K);
      if (a >= -1e-8 * std::max(1.0, v.norm())) v += (1.0 + std::max(a, 0.0)) * e;
    };
    shift(s);
    shift(z);
    double tau = 1.0, kappa = 1.0;

    Scaling W;
    struct Best {
      double score = kInf;
      Result r;
    } best;
    for (int it = 0; it <= opt.max_iter; ++it) {
      res.iterations = it;
      const VectorXd rx = G.transpose() * z + c * tau;
      const VectorXd rz = G * x + s - h * tau;
      const double cx = c.dot(x), hz = h.dot(z);
      const double rt = cx + hz + kappa;
      const double gap = s.dot(z);
      const double mu = (gap + tau * kappa) / (nu + 1.0);
      const double pcost = cx / tau, dcost = -hz / tau;
      const double pres = rz.norm() / tau / nrmh;
      const double dres = rx.norm() / tau / nrmc;
      double relgap = kInf;
      if (pcost < 0.0)
        relgap = gap / (tau * tau) / -pcost;
      else if (dcost > 0.0)
        relgap = gap / (tau * tau) / dcost;
      res.pcost = pcost;
      res.dcost = dcost;
      res.pres = pres;
      res.dres = dres;
      res.gap = gap / (tau * tau);
      if (opt.verbose)
        std::printf("%3d pcost % .9e dcost % .9e gap %.2e pres %.2e dres %.2e tau %.2e kappa %.2e\n", it, pcost,
                    dcost, gap / (tau * tau), pres, dres, tau, kappa);
      if (pres <= opt.feastol && dres <= opt.feastol && (gap / (tau * tau) <= opt.abstol || relgap <= opt.reltol)) {
        res.status = Status::optimal;
        res.x = x / tau;
        res.s = s / tau;
        res.z = z / tau;
        return res;
      }
      const double score = std::max({pres, dres, std::min(gap / (tau * tau), relgap)});
      if (score < best.score) {
        best.score = score;
        best.r = res;
        best.r.x = x / tau;
        best.r.s = s / tau;
        best.r.z = z / tau;
      }
      if (hz < 0.0) {
        const double pinf = (G.transpose() * z).norm() / nrmc / -hz;
        if (pinf <= opt.inftol) {
          res.status = Status::infeasible;
          res.z = z / -hz;
          res.message = "dual improving ray";
          return res;
        }
      }
      if (cx < 0.0) {
        const double dinf = (G * x + s).norm() / nrmh / -cx;
        if (dinf <= opt.inftol) {
          res.status = Status::unbounded;
          res.x = x / -cx;
          res.message = "primal improving ray";
          return res;
        }
      }
      if (it == opt.max_iter) break;

      if (!compute_scaling(s, z, K, L, W)) {
        res.message = "lost cone interior";
        break;
      }
      const MatrixXd Gh = scaled(&W);
      Eigen::HouseholderQR<MatrixXd> qr(Gh);
      const MatrixXd Rf = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
      if (Rf.diagonal().cwiseAbs().minCoeff() <= 1e-300) {
        res.message = "Newton system singular";
        break;
      }
      const VectorXd lam = expand(W.lambda, K, L);
      const VectorXd hh = apply(W, K, L, Op::WinvT, h);
      const VectorXd rzh = apply(W, K, L, Op::WinvT, rz);

      // [[0, Gh'], [Gh, -I]] [dx; zt] = [b1; b2h] through Gh = QR.
      auto base = [&](const VectorXd& b1, const VectorXd& b2h, VectorXd& dx, VectorXd& zt) {
        VectorXd t = Rf.transpose().triangularView<Eigen::Lower>().solve(b1);
        const VectorXd qb = (qr.householderQ().transpose() * b2h).head(n);
        dx = Rf.triangularView<Eigen::Upper>().solve(t + qb);
        zt = Gh * dx - b2h;
      };
      auto kkt = [&](const VectorXd& b1, const VectorXd& b2h, VectorXd& dx, VectorXd& zt) {
        base(b1, b2h, dx, zt);
        for (int r = 0; r < 2; ++r) {
          const VectorXd r1 = b1 - Gh.transpose() * zt;
          const VectorXd r2 = b2h - (Gh * dx - zt);
          VectorXd ex, ez;
          base(r1, r2, ex, ez);
          dx += ex;
          zt += ez;
        }
      };
      VectorXd x1, z1;
      kkt(-c, hh, x1, z1);
      const double den_base = c.dot(x1) + hh.dot(z1);

      const VectorXd lsq = jordan(lam, lam, K, L);
      auto direction = [&](double eta, const VectorXd& rsz, double rtk, VectorXd& dx, VectorXd& dst, VectorXd& dzt,
                           double& dtau, double& dkap) {
        const VectorXd lr = lambda_solve(W.lambda, rsz, K, L);
        VectorXd x0, z0;
        kkt(-eta * rx, -eta * rzh - lr, x0, z0);
        dtau = (-eta * rt - c.dot(x0) - hh.dot(z0) - rtk / tau) / (den_base - kappa / tau);
        dx = x0 + dtau * x1;
        dzt = z0 + dtau * z1;
        // ds from the linearized primal equation keeps G x + s - h tau on track
        // when W is badly conditioned.
        dst = apply(W, K, L, Op::WinvT, VectorXd(-eta * rz - G * dx + h * dtau));
        dkap = (rtk - kappa * dtau) / tau;
      };
      auto step_len = [&](const VectorXd& dst, const VectorXd& dzt, double dtau, double dkap) {
        double a = std::min(max_step(W.lambda, dst, K, L), max_step(W.lambda, dzt, K, L));
        if (dtau < 0.0) a = std::min(a, -tau / dtau);
        if (dkap < 0.0) a = std::min(a, -kappa / dkap);
        return a;
      };

      VectorXd dxa, dsa, dza;
      double dta, dka;
      direction(1.0, -lsq, -tau * kappa, dxa, dsa, dza, dta, dka);
      const double aa = std::min(1.0, step_len(dsa, dza, dta, dka));
      const double sigma = std::pow(1.0 - aa, 3);

      VectorXd dx, dst, dzt;
      double dtau, dkap;
      const VectorXd rsz = -lsq + sigma * mu * e - jordan(dsa, dza, K, L);
      direction(1.0 - sigma, rsz, -tau * kappa + sigma * mu - dta * dka, dx, dst, dzt, dtau, dkap);
      double a = std::min(1.0, 0.99 * step_len(dst, dzt, dtau, dkap));
      const VectorXd ds = apply(W, K, L, Op::WT, dst);
      const VectorXd dz = apply(W, K, L, Op::Winv, dzt);
      for (int bt = 0; bt < 8 && !(strictly_inside(s + a * ds, K) && strictly_inside(z + a * dz, K)); ++bt) a *= 0.5;
      if (!(a > 1e-12)) {
        res.message = "step length collapsed";
        break;
      }
      x += a * dx;
      s += a * ds;
      z += a * dz;
      tau += a * dtau;
      kappa += a * dkap;
    }
    // Stalled near the optimal face: fall back to the best iterate seen when it
    // is within the reduced-accuracy tolerance.
    if (best.score <= opt.reduced_tol) {
      best.r.status = Status::optimal;
      best.r.message = "reduced accuracy (" + (res.message.empty() ? std::string("iteration limit") : res.message) + ")";
      return best.r;
    }
    res.status = Status::numerical_failure;
    if (res.message.empty()) res.message = "iteration limit";
    res.x = x / tau;
    res.s = s / tau;
    res.z = z / tau;
    return res;
  }
};

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int a) { return p[a] == a ? a : p[a] = find(p[a]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

struct Param {
  bool consistent = true;
  VectorXd x0;
  MatrixXd M;
};

// x = x0 + M z parametrizes {Ax = b}. Variables the cones never see (`seen`
// false) are eliminated blockwise first and recovered by pseudo-inverse.
Param parametrize(const MatrixXd& A, const VectorXd& b, const std::vector<bool>& seen) {
  const int n = static_cast<int>(A.cols());
  const int me = static_cast<int>(A.rows());
  Param P;
  std::vector<int> ycols, wcols;
  std::vector<bool> inA(n, false);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < me; ++i)
      if (A(i, j) != 0.0) {
        inA[j] = true;
        break;
      }
  for (int j = 0; j < n; ++j) {
    if (seen[j])
      ycols.push_back(j);
    else if (inA[j])
      wcols.push_back(j);
  }
  const int ny = static_cast<int>(ycols.size());

  UnionFind uf(me);
  std::vector<int> first_row(wcols.size(), -1);
  for (size_t q = 0; q < wcols.size(); ++q)
    for (int i = 0; i < me; ++i)
      if (A(i, wcols[q]) != 0.0) {
        if (first_row[q] < 0)
          first_row[q] = i;
        else
          uf.unite(i, first_row[q]);
      }
  std::vector<std::vector<int>> comp_rows(me), comp_w(me);
  for (int i = 0; i < me; ++i) comp_rows[uf.find(i)].push_back(i);
  for (size_t q = 0; q < wcols.size(); ++q) comp_w[uf.find(first_row[q])].push_back(static_cast<int>(q));

  MatrixXd Ay(me, ny);
  for (int q = 0; q < ny; ++q) Ay.col(q) = A.col(ycols[q]);

  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  struct Recovery {
    std::vector<int> rows, w;
    MatrixXd K;
  };
  std::vector<Recovery> rec;
  for (int r = 0; r < me; ++r) {
    if (comp_rows[r].empty()) continue;
    const auto& R = comp_rows[r];
    const auto& Wq = comp_w[r];
    if (Wq.empty()) {
      for (int i : R) {
        rows.push_back(Ay.row(i).transpose());
        rhs.push_back(b[i]);
      }
      continue;
    }
    MatrixXd Aw(R.size(), Wq.size());
    for (size_t a = 0; a < R.size(); ++a)
      for (size_t q = 0; q < Wq.size(); ++q) Aw(a, q) = A(R[a], wcols[Wq[q]]);
    Eigen::JacobiSVD<MatrixXd> svd(Aw, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double tol = 1e-12 * std::max(1.0, sv.size() ? sv[0] : 0.0) * std::max(Aw.rows(), Aw.cols());
    int rank = 0;
    while (rank < sv.size() && sv[rank] > tol) ++rank;
    const MatrixXd& U = svd.matrixU();
    for (int t = rank; t < static_cast<int>(R.size()); ++t) {
      VectorXd row = VectorXd::Zero(ny);
      double rr = 0.0;
      for (size_t a = 0; a < R.size(); ++a) {
        row += U(a, t) * Ay.row(R[a]).transpose();
        rr += U(a, t) * b[R[a]];
      }
      rows.push_back(row);
      rhs.push_back(rr);
    }
    Recovery rc;
    rc.rows = R;
    for (int q : Wq) rc.w.push_back(wcols[q]);
    rc.K = svd.matrixV().leftCols(rank) * sv.head(rank).cwiseInverse().asDiagonal() *
           U.leftCols(rank).transpose();
    rec.push_back(std::move(rc));
  }

  VectorXd y0 = VectorXd::Zero(ny);
  MatrixXd N = MatrixXd::Identity(ny, ny);
  if (!rows.empty() && ny > 0) {
    MatrixXd Ah(rows.size(), ny);
    VectorXd bh(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      Ah.row(i) = rows[i].transpose();
      bh[i] = rhs[i];
    }
    Eigen::BDCSVD<MatrixXd> svd(Ah, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double tol = 1e-11 * std::max(1.0, sv.size() ? sv[0] : 0.0);
    int rank = 0;
    while (rank < sv.size() && sv[rank] > tol) ++rank;
    y0 = svd.matrixV().leftCols(rank) *
         (sv.head(rank).cwiseInverse().asDiagonal() * (svd.matrixU().leftCols(rank).transpose() * bh));
    if ((Ah * y0 - bh).norm() > 1e-9 * std::max(1.0, bh.norm())) P.consistent = false;
    N = svd.matrixV().rightCols(ny - rank);
  } else if (!rows.empty()) {
    VectorXd bh(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) bh[i] = rhs[i];
    if (bh.norm() > 1e-9) P.consistent = false;
  }

  const int nz = static_cast<int>(N.cols());
  P.x0 = VectorXd::Zero(n);
  P.M = MatrixXd::Zero(n, nz);
  for (int q = 0; q < ny; ++q) {
    P.x0[ycols[q]] = y0[q];
    P.M.row(ycols[q]) = N.row(q);
  }
  for (const auto& rc : rec) {
    VectorXd br(rc.rows.size());
    MatrixXd Ar(rc.rows.size(), ny);
    for (size_t a = 0; a < rc.rows.size(); ++a) {
      br[a] = b[rc.rows[a]];
      Ar.row(a) = Ay.row(rc.rows[a]);
    }
    const VectorXd w0 = rc.K * (br - Ar * y0);
    const MatrixXd wm = -rc.K * (Ar * N);
    for (size_t q = 0; q < rc.w.size(); ++q) {
      P.x0[rc.w[q]] = w0[q];
      P.M.row(rc.w[q]) = wm.row(q);
    }
  }
  return P;
}

}  // namespace

Result solve(const Problem& prob, const Settings& settings) {
  const int n = static_cast<int>(prob.c.size());
  const Cones& K0 = prob.cones;
  MatrixXd G = MatrixXd(prob.G);
  VectorXd h = prob.h;
  MatrixXd A = prob.A.rows() > 0 ? MatrixXd(prob.A) : MatrixXd(0, n);
  VectorXd b = prob.b.size() > 0 ? prob.b : VectorXd(0);

  std::vector<bool> seen(n, false);
  for (int j = 0; j < n; ++j) seen[j] = prob.c[j] != 0.0 || (G.rows() > 0 && G.col(j).cwiseAbs().maxCoeff() > 0.0);

  // rowmap[r] = original slack row of current row r
  std::vector<int> rowmap(G.rows());
  std::iota(rowmap.begin(), rowmap.end(), 0);
  Cones K = K0;

  Result fail;
  fail.status = Status::infeasible;
  Param P;
  MatrixXd Gp;
  VectorXd hp;
  for (int round = 0; round < 64; ++round) {
    P = parametrize(A, b, seen);
    if (!P.consistent) {
      fail.message = "inconsistent equality constraints";
      return fail;
    }
    Gp = G * P.M;
    hp = h - G * P.x0;
    if (!settings.presolve) break;
    std::vector<int> keep;
    std::vector<VectorXd> new_rows;
    std::vector<double> new_rhs;
    Cones nextK;
    auto row_zero = [&](int r, double scale) {
      return Gp.cols() == 0 || Gp.row(r).cwiseAbs().maxCoeff() <= 1e-12 * scale;
    };
    for (int i = 0; i < K.l; ++i) {
      const double scale = std::max({1.0, std::abs(hp[i]), Gp.cols() ? Gp.row(i).cwiseAbs().maxCoeff() : 0.0});
      if (row_zero(i, std::max(1.0, std::abs(h[i])))) {
        if (hp[i] < -1e-9 * scale) {
          fail.message = "constant orthant row is negative";
          return fail;
        }
        continue;
      }
      keep.push_back(i);
    }
    nextK.l = static_cast<int>(keep.size());
    int off = K.l;
    bool changed = false;
    for (int k : K.s) {
      const int d = svec_dim(k);
      double scale = 1.0;
      for (int r = off; r < off + d; ++r) {
        scale = std::max(scale, std::abs(hp[r]));
        if (Gp.cols()) scale = std::max(scale, Gp.row(r).cwiseAbs().maxCoeff());
      }
      std::vector<bool> drop(k, false);
      for (int i = 0; i < k; ++i) {
        const int r = off + svec_index(i, i, k);
        if (row_zero(r, scale)) {
          if (hp[r] < -1e-9 * scale) {
            fail.message = "constant diagonal of a PSD block is negative";
            return fail;
          }
          if (hp[r] <= 1e-12 * scale) drop[i] = true;
        }
      }
      std::vector<int> kept_idx;
      for (int i = 0; i < k; ++i)
        if (!drop[i]) kept_idx.push_back(i);
      for (int i = 0; i < k; ++i) {
        if (!drop[i]) continue;
        changed = true;
        for (int j = 0; j < k; ++j) {
          if (j == i || (drop[j] && j < i)) continue;
          const int r = off + svec_index(i, j, k);
          new_rows.push_back(G.row(r).transpose());
          new_rhs.push_back(h[r]);
        }
      }
      const int kk = static_cast<int>(kept_idx.size());
      if (kk > 0) {
        for (int j = 0; j < kk; ++j)
          for (int i = j; i < kk; ++i) keep.push_back(off + svec_index(kept_idx[i], kept_idx[j], k));
        nextK.s.push_back(kk);
      }
      off += d;
    }
    const bool rows_dropped = static_cast<int>(keep.size()) != G.rows();
    if (rows_dropped) {
      MatrixXd G2(keep.size(), n);
      VectorXd h2(keep.size());
      std::vector<int> rm2(keep.size());
      for (size_t r = 0; r < keep.size(); ++r) {
        G2.row(r) = G.row(keep[r]);
        h2[r] = h[keep[r]];
        rm2[r] = rowmap[keep[r]];
      }
      G = std::move(G2);
      h = std::move(h2);
      rowmap = std::move(rm2);
      K = nextK;
    }
    if (!new_rows.empty()) {
      MatrixXd A2(A.rows() + new_rows.size(), n);
      VectorXd b2(A.rows() + new_rows.size());
      A2.topRows(A.rows()) = A;
      b2.head(A.rows()) = b;
      for (size_t q = 0; q < new_rows.size(); ++q) {
        A2.row(A.rows() + q) = new_rows[q].transpose();
        b2[A.rows() + q] = new_rhs[q];
      }
      A = std::move(A2);
      b = std::move(b2);
    }
    if (!changed) {
      if (rows_dropped) {
        Gp = G * P.M;
        hp = h - G * P.x0;
      }
      break;
    }
  }

  VectorXd cp = P.M.transpose() * prob.c;
  const double c0 = prob.c.dot(P.x0);

  // Restrict to the directions the cones see.
  MatrixXd V;
  int rank = 0;
  if (Gp.cols() > 0 && Gp.rows() > 0) {
    Eigen::BDCSVD<MatrixXd> svd(Gp, Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double tol = 1e-10 * std::max(1.0, sv.size() ? sv[0] : 0.0);
    while (rank < sv.size() && sv[rank] > tol) ++rank;
    const MatrixXd& Vf = svd.matrixV();
    V = Vf.leftCols(rank);
    const MatrixXd Nn = Vf.rightCols(Vf.cols() - rank);
    if (Nn.cols() > 0 && (Nn.transpose() * cp).norm() > 1e-9 * std::max(1.0, cp.norm())) {
      Result r;
      r.status = Status::unbounded;
      r.message = "objective direction unseen by any cone";
      return r;
    }
  } else {
    if (cp.size() > 0 && cp.norm() > 1e-9 * std::max(1.0, prob.c.norm())) {
      Result r;
      r.status = Status::unbounded;
      r.message = "unconstrained objective direction";
      return r;
    }
    V = MatrixXd(Gp.cols(), 0);
  }
  const MatrixXd Mr = P.M * V;
  const MatrixXd Gr = Gp * V;
  const VectorXd cr = V.transpose() * cp;

  Result out;
  out.reduced_vars = rank;
  out.removed_directions = static_cast<int>(P.M.cols()) - rank;
  VectorXd w;
  if (rank == 0) {
    const double mgn = cone_margin(hp, K);
    if (mgn < -settings.feastol * std::max(1.0, hp.norm())) {
      out.status = Status::infeasible;
      out.message = "fixed point outside cone";
      return out;
    }
    out.status = Status::optimal;
    w = VectorXd(0);
    out.z = VectorXd::Zero(K0.dim());
  } else {
    Ipm ipm(Gr, hp, cr, K, settings);
    Result r = ipm.run();
    out.status = r.status;
    out.iterations = r.iterations;
    out.pres = r.pres;
    out.dres = r.dres;
    out.gap = r.gap;
    out.dcost = r.dcost;
    out.message = r.message;
    if (r.status != Status::optimal && r.status != Status::numerical_failure) return out;
    w = r.x;
    out.z = VectorXd::Zero(K0.dim());
    for (size_t q = 0; q < rowmap.size(); ++q) out.z[rowmap[q]] = r.z[q];
  }
  out.x = P.x0 + Mr * w;
  out.s = prob.h - prob.G * out.x;
  out.pcost = prob.c.dot(out.x);
  if (rank == 0) out.dcost = out.pcost;
  else out.dcost += c0;
  return out;
}

}  // namespace conic
}  // namespace pwacert
