#include "uavco/tvlqr.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "uavco/quat.hpp"

namespace uavco {
namespace {

double care_residual_norm(const MatX& A, const MatX& G, const MatX& Q,
                          const MatX& P) {
  return (A.transpose() * P + P * A - P * G * P + Q).norm();
}

// Reduces a 13-dim state derivative to the 12-dim tangent whose attitude
// block lives in the chart at `q_base`.
ErrVec reduce_rate(const Vec4& q_base, const Vec13& f) {
  ErrVec g;
  g.segment<3>(0) = f.segment<3>(0);
  const Vec4 qdot = f.segment<4>(3);
  g.segment<3>(3) =
      2.0 * quat::multiply(quat::conjugate(q_base), qdot).tail<3>();
  g.segment<3>(6) = f.segment<3>(7);
  g.segment<3>(9) = f.segment<3>(10);
  return g;
}

}  // namespace

ErrVec error_state(const State& x, const State& ref) {
  ErrVec e;
  e.segment<3>(0) = x.p - ref.p;
  const Vec4 qe = quat::multiply(quat::conjugate(ref.q), x.q);
  const double sign = qe[0] < 0.0 ? -1.0 : 1.0;
  e.segment<3>(3) = 2.0 * sign * qe.tail<3>();
  e.segment<3>(6) = x.v - ref.v;
  e.segment<3>(9) = x.w - ref.w;
  return e;
}

State retract(const State& base, const ErrVec& dx) {
  State out;
  out.p = base.p + dx.segment<3>(0);
  out.q = quat::normalized(
      quat::multiply(base.q, quat::exp_map(dx.segment<3>(3))));
  out.v = base.v + dx.segment<3>(6);
  out.w = base.w + dx.segment<3>(9);
  return out;
}

bool linearize(const State& x, const ControlInput& u, const VehicleParams& vp,
               Mat12& A, Mat12x4& B) {
  ErrVec mag;
  mag << x.p.cwiseAbs(), Vec3::Zero(), x.v.cwiseAbs(), x.w.cwiseAbs();
  for (int j = 0; j < kErrDim; ++j) {
    const double h = 1e-6 * std::max(1.0, mag[j]);
    ErrVec d = ErrVec::Zero();
    d[j] = h;
    const Vec13 fp = state_derivative(retract(x, d), u, vp);
    const Vec13 fm = state_derivative(retract(x, -d), u, vp);
    A.col(j) = (reduce_rate(x.q, fp) - reduce_rate(x.q, fm)) / (2.0 * h);
  }
  const VecU u0 = u.pack();
  for (int j = 0; j < kInputDim; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(u0[j]));
    VecU up = u0, um = u0;
    up[j] += h;
    um[j] -= h;
    const Vec13 fp = state_derivative(x, ControlInput::unpack(up), vp);
    const Vec13 fm = state_derivative(x, ControlInput::unpack(um), vp);
    B.col(j) = (reduce_rate(x.q, fp) - reduce_rate(x.q, fm)) / (2.0 * h);
  }
  return A.allFinite() && B.allFinite();
}

CareResult solve_care(const MatX& A, const MatX& B, const MatX& Q,
                      const MatX& R) {
  CareResult out;
  const int n = static_cast<int>(A.rows());
  out.P = MatX::Zero(n, n);
  out.K = MatX::Zero(B.cols(), n);
  out.residual = std::numeric_limits<double>::infinity();

  Eigen::LLT<MatX> rfac(R);
  if (rfac.info() != Eigen::Success) return out;
  const MatX G = B * rfac.solve(B.transpose());

  // Sign-function iteration on the Hamiltonian, with determinant scaling to
  // accelerate convergence.
  MatX Z(2 * n, 2 * n);
  Z << A, -G, -Q, -A.transpose();
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<MatX> lu(Z);
    double log_det = 0.0;
    for (int i = 0; i < 2 * n; ++i) {
      log_det += std::log(std::abs(lu.matrixLU()(i, i)));
    }
    if (!std::isfinite(log_det)) return out;
    const double c = std::exp(log_det / (2.0 * n));
    if (!(c > 1e-100 && c < 1e100)) return out;
    const MatX zinv = lu.solve(MatX::Identity(2 * n, 2 * n));
    const MatX next = 0.5 * (Z / c + c * zinv);
    const double delta = (next - Z).norm();
    Z = next;
    if (!Z.allFinite()) return out;
    if (delta <= 1e-12 * std::max(1.0, Z.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) return out;

  // The stable invariant subspace of the Hamiltonian is the kernel of
  // sign(H) + I; P is recovered from its graph form by an overdetermined
  // least-squares solve.
  const MatX eye = MatX::Identity(n, n);
  MatX lhs(2 * n, n), rhs(2 * n, n);
  lhs << Z.topRightCorner(n, n), Z.bottomRightCorner(n, n) + eye;
  rhs << -(Z.topLeftCorner(n, n) + eye), -Z.bottomLeftCorner(n, n);
  MatX P = lhs.colPivHouseholderQr().solve(rhs);
  P = 0.5 * (P + P.transpose()).eval();

  // Newton-Kleinman polish until the residual contract holds.
  double res = care_residual_norm(A, G, Q, P);
  for (int it = 0; it < 25 && !(res <= 1e-8 * (1.0 + P.norm())); ++it) {
    const MatX acl_t = (A - G * P).transpose();
    const MatX W = Q + P * G * P;
    const MatX op = Eigen::kroneckerProduct(eye, acl_t).eval() +
                    Eigen::kroneckerProduct(acl_t, eye).eval();
    const VecX w_vec = Eigen::Map<const VecX>(W.data(), n * n);
    const VecX p_vec = op.partialPivLu().solve(-w_vec);
    MatX refined = Eigen::Map<const MatX>(p_vec.data(), n, n);
    refined = 0.5 * (refined + refined.transpose()).eval();
    if (!refined.allFinite()) break;
    P = refined;
    res = care_residual_norm(A, G, Q, P);
  }

  out.P = P;
  out.residual = res;
  out.K = rfac.solve(B.transpose() * P);
  const Eigen::EigenSolver<MatX> eig(A - B * out.K, false);
  out.abscissa = eig.eigenvalues().real().maxCoeff();
  out.ok = P.allFinite() && std::isfinite(out.abscissa) &&
           res <= 1e-8 * (1.0 + P.norm()) && out.abscissa < 0.0;
  return out;
}

GainResult synthesize_gains(const State& x, const ControlInput& u,
                            const VehicleParams& vp, const LqrWeights& w) {
  GainResult g;
  Mat12 A;
  Mat12x4 B;
  if (!linearize(x, u, vp, A, B)) return g;
  g.A = A;
  g.B = B;
  const CareResult care = solve_care(A, B, w.Q, w.R);
  g.residual = care.residual;
  g.abscissa = care.abscissa;
  if (!care.ok) return g;
  g.P = care.P;
  g.K = care.K;
  g.ok = true;
  return g;
}

ControlInput lqr_control(const State& x, const State& ref_x,
                         const ControlInput& ref_u, const GainResult& gains,
                         const ActuatorLimits& lim) {
  const VecU raw = ref_u.pack() - gains.K * error_state(x, ref_x);
  ControlInput out = ControlInput::unpack(raw);
  out.thrust = std::clamp(out.thrust, lim.thrust_min, lim.thrust_max);
  for (int i = 0; i < 3; ++i) {
    out.delta[i] = std::clamp(out.delta[i], lim.delta_min, lim.delta_max);
  }
  return out;
}

ControlInput tracker_command(const Trajectory& ref, double t, const State& x,
                             const GainResult& gains,
                             const ActuatorLimits& lim) {
  State ref_x;
  ControlInput ref_u;
  ref.sample(t, ref_x, ref_u);
  return lqr_control(x, ref_x, ref_u, gains, lim);
}

}  // namespace uavco
