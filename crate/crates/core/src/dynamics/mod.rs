//! Ground-truth quadrotor physics shared by the simulator plant and the
//! estimators' process models.

pub mod params;
pub mod quaternion;
pub mod rigid_body;
pub mod rotor;
pub mod state;

pub use params::{DragCoefficients, RotorGeometry, VehicleParams};
pub use quaternion::{wrap_angle, EulerAngles, Quaternion};
pub use rigid_body::{
    continuous_jacobian, numerical_jacobian, rk4_step, rk4_step_with_jacobian, rotational_energy,
    state_derivative, step_dynamics,
};
pub use rotor::{
    net_wrench, plant_wrench, rotor_wrench_full, rotor_wrench_near_hover, BodyWrench, RotorSpeeds,
    RotorWrench,
};
pub use state::{StateMatrix, StateVector, VehicleState, STATE_DIM};
