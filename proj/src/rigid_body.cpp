#include "recoil/rigid_body.hpp"

#include <stdexcept>

namespace recoil {

void InertialParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("inertial.mass must be > 0");
  if (!(inertia_diag.array() > 0.0).all())
    throw std::invalid_argument("inertial.inertia must be > 0 componentwise");
  if (!(gravity > 0.0)) throw std::invalid_argument("inertial.gravity must be > 0");
}

bool RigidBodyState::finite() const {
  return position.allFinite() && velocity.allFinite() && rotation.allFinite() &&
         angular_velocity.allFinite();
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

RigidBodyDerivative dynamics_derivative(const RigidBodyState& state,
                                        double thrust,
                                        const Eigen::Vector3d& torque,
                                        const Eigen::Vector3d& disturbance_force,
                                        const InertialParams& params) {
  if (!state.finite() || !std::isfinite(thrust) || !torque.allFinite() ||
      !disturbance_force.allFinite()) {
    throw std::invalid_argument("invalid state");
  }

  const Eigen::Vector3d body_force = thrust * Eigen::Vector3d::UnitZ() + disturbance_force;
  const Eigen::Vector3d& w = state.angular_velocity;
  const Eigen::Vector3d inertia_w = params.inertia_diag.cwiseProduct(w);

  RigidBodyDerivative d;
  d.position = state.velocity;
  d.velocity = -params.gravity * Eigen::Vector3d::UnitZ() +
               state.rotation * body_force / params.mass;
  d.rotation = state.rotation * skew(w);
  d.angular_velocity = (-w.cross(inertia_w) + torque).cwiseQuotient(params.inertia_diag);
  return d;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  if (!(r.determinant() > 0.0)) throw std::invalid_argument("degenerate rotation");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d result = svd.matrixU() * svd.matrixV().transpose();
  if (result.determinant() < 0.0) {
    // flip the singular direction so the projection lands on SO(3)
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    result = u * svd.matrixV().transpose();
  }
  return result;
}

namespace {

RigidBodyState advance(const RigidBodyState& s, const RigidBodyDerivative& d, double h) {
  RigidBodyState out;
  out.position = s.position + h * d.position;
  out.velocity = s.velocity + h * d.velocity;
  out.rotation = s.rotation + h * d.rotation;
  out.angular_velocity = s.angular_velocity + h * d.angular_velocity;
  return out;
}

}  // namespace

RigidBodyState integrate_step(const RigidBodyState& state,
                              double thrust,
                              const Eigen::Vector3d& torque,
                              const Eigen::Vector3d& disturbance_force,
                              const InertialParams& params,
                              double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");

  const RigidBodyDerivative k1 = dynamics_derivative(state, thrust, torque, disturbance_force, params);
  const RigidBodyDerivative k2 = dynamics_derivative(advance(state, k1, 0.5 * dt), thrust, torque, disturbance_force, params);
  const RigidBodyDerivative k3 = dynamics_derivative(advance(state, k2, 0.5 * dt), thrust, torque, disturbance_force, params);
  const RigidBodyDerivative k4 = dynamics_derivative(advance(state, k3, dt), thrust, torque, disturbance_force, params);

  const double h = dt / 6.0;
  RigidBodyState out;
  out.position = state.position + h * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position);
  out.velocity = state.velocity + h * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
  out.rotation = state.rotation + h * (k1.rotation + 2.0 * k2.rotation + 2.0 * k3.rotation + k4.rotation);
  out.angular_velocity = state.angular_velocity +
      h * (k1.angular_velocity + 2.0 * k2.angular_velocity + 2.0 * k3.angular_velocity + k4.angular_velocity);
  out.rotation = orthonormalize(out.rotation);
  return out;
}

}  // namespace recoil
