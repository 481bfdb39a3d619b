#include "icbf/nls.hpp"

#include <cmath>

namespace icbf {

CostEval cost_eval_into(CostWorkspace& ws, const Vec2& p, const Eigen::VectorXd& m,
                        MeasurementModel model, const BeaconSet& beacons, int order) {
  if (order < 0 || order > 2) throw InvalidInput("cost_eval: order must be in [0, 2]");
  if (m.size() != beacons.K())
    throw InvalidInput("cost_eval: measurement size does not match beacon count");

  ws.model = eval_model(model, p, beacons, order);
  ws.cov = eval_covariance(model, ws.model, order);
  const int K = beacons.K();
  const bool wrap = (model == MeasurementModel::Bearing);

  CostEval out;
  out.order = order;
  for (int k = 0; k < K; ++k) {
    const double raw = m[k] - ws.model.value[k];
    const double r = wrap ? wrap_residual(raw) : raw;
    const double w = 1.0 / ws.cov.sigma[k];
    out.J += r * r * w;
    if (order < 1) continue;

    const Vec2 D = ws.model.d1.row(k).transpose();
    const Vec2 sg = ws.cov.d1.row(k).transpose();
    // dJ = 2 r r' w + r^2 w', with r' = -D and w' = -sigma' w^2
    out.grad += -2.0 * r * w * D - (r * r * w * w) * sg;
    if (order < 2) continue;

    const Mat2 M2 = ws.model.d2[k];
    const Mat2 Sg2 = ws.cov.d2[k];
    const Mat2 Dsg = D * sg.transpose();
    out.hess += 2.0 * w * (D * D.transpose()) - 2.0 * r * w * M2 +
                2.0 * r * w * w * (Dsg + Dsg.transpose()) +
                (r * r) * (2.0 * w * w * w * (sg * sg.transpose()) - w * w * Sg2);
  }
  return out;
}

CostEval cost_eval(const Vec2& p, const Eigen::VectorXd& m, MeasurementModel model,
                   const BeaconSet& beacons, int order) {
  CostWorkspace ws;
  return cost_eval_into(ws, p, m, model, beacons, order);
}

NlsResult solve_nls(const Eigen::VectorXd& m, const Vec2& p0, const NlsOptions& opts,
                    MeasurementModel model, const BeaconSet& beacons) {
  if (!(opts.step > 0.0)) throw InvalidInput("solve_nls: step must be positive");
  if (opts.max_iters < 0) throw InvalidInput("solve_nls: max_iters must be >= 0");

  NlsResult out;
  CostWorkspace ws;
  Vec2 p = p0;
  CostEval ce = cost_eval_into(ws, p, m, model, beacons, 1);
  if (opts.record_trace) out.j_trace.push_back(ce.J);

  int rising = 0;
  while (out.iters < opts.max_iters && ce.grad.norm() > opts.grad_tol) {
    const Vec2 p_next = p - opts.step * ce.grad;
    if (!p_next.allFinite()) {
      out.diverged = true;  // keep the last finite iterate
      break;
    }
    const CostEval ce_next = cost_eval_into(ws, p_next, m, model, beacons, 1);
    if (!std::isfinite(ce_next.J) || !ce_next.grad.allFinite()) {
      out.diverged = true;
      break;
    }
    rising = (ce_next.J > ce.J) ? rising + 1 : 0;
    p = p_next;
    ce = ce_next;
    ++out.iters;
    if (opts.record_trace) out.j_trace.push_back(ce.J);
    if (rising >= 10) {
      out.diverged = true;
      break;
    }
  }
  out.p_hat = p;
  out.converged = !out.diverged && ce.grad.norm() <= opts.grad_tol;
  return out;
}

InformationField information_field(const Vec2& p, MeasurementModel model,
                                   const BeaconSet& beacons, bool with_second) {
  InformationField out;
  const int model_order = with_second ? 3 : 2;
  const ModelDerivs md = eval_model(model, p, beacons, model_order);
  const CovarianceDerivs cov = eval_covariance(model, md, 2);
  const int K = beacons.K();

  // H is defined as the cost Hessian at zero residual; evaluate it through
  // cost_eval so the two agree bit for bit.
  out.H = cost_eval(p, md.value, model, beacons, 2).hess;

  for (int c = 0; c < 2; ++c) out.dH[c].setZero();
  std::array<std::array<Mat2, 2>, 2> d2{};
  if (with_second) {
    for (auto& row : d2)
      for (auto& mset : row) mset.setZero();
  }

  for (int k = 0; k < K; ++k) {
    const Vec2 D = md.d1.row(k).transpose();
    const Mat2 M2 = md.d2[k];
    const double w = 1.0 / cov.sigma[k];
    const Vec2 sg = cov.d1.row(k).transpose();
    const Vec2 wg = -w * w * sg;  // gradient of the weight 1/sigma

    for (int c = 0; c < 2; ++c) {
      // d/dp_c [2 w D D^T] at zero residual
      const Mat2 t1 = M2.col(c) * D.transpose();
      out.dH[c] += 2.0 * (w * (t1 + t1.transpose()) + wg[c] * (D * D.transpose()));
    }

    if (with_second) {
      const Mat2 Sg2 = cov.d2[k];
      for (int c = 0; c < 2; ++c) {
        for (int d = 0; d < 2; ++d) {
          const double wcd =
              -w * w * Sg2(c, d) + 2.0 * w * w * w * sg[c] * sg[d];
          const Mat2 m3c = md.d3[k][c];  // (a,b) slice of third derivative
          Mat2 term = Mat2::Zero();
          // w * (M3_acd D_b + M2_ac M2_bd + M2_ad M2_bc + D_a M3_bcd)
          const Mat2 t_m3 = m3c.col(d) * D.transpose();
          term += w * (t_m3 + t_m3.transpose());
          term += w * (M2.col(c) * M2.col(d).transpose() +
                       M2.col(d) * M2.col(c).transpose());
          const Mat2 t_wd = M2.col(c) * D.transpose();
          term += wg[d] * (t_wd + t_wd.transpose());
          const Mat2 t_wc = M2.col(d) * D.transpose();
          term += wg[c] * (t_wc + t_wc.transpose());
          term += wcd * (D * D.transpose());
          d2[c][d] += 2.0 * term;
        }
      }
    }
  }
  if (with_second) out.d2H = d2;

  SymMatrix h2 = SymMatrix::from_matrix(out.H);
  out.eig = eig_sym(h2);
  return out;
}

}  // namespace icbf
