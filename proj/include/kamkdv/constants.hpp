#pragma once

// Default tolerances and numerical knobs shared across modules.
namespace kamkdv::defaults {

inline constexpr double tol_diffeo = 1e-12;
inline constexpr int diffeo_max_iter = 200;
inline constexpr double tol_mean = 1e-12;
inline constexpr double resonance_floor = 1e-300;

inline constexpr int flow_steps = 64;
inline constexpr double flow_step_target = 5e-3;  // bound on h * Lip for the RK4 Birkhoff flows
inline constexpr double flow_richardson_tol = 1e-10;
inline constexpr int transport_steps = 48;

inline constexpr double series_tol = 1e-14;
inline constexpr int series_max_terms = 60;

inline constexpr double tol_red = 1e-12;
inline constexpr double tol_imag = 1e-9;
inline constexpr int kam_max_scales = 8;

inline constexpr double step4_divisor_min = 0.5;
inline constexpr double torus_det_floor = 1e-8;
inline constexpr double m1_rcond_floor = 1e-12;

inline constexpr double a_exp = 0.1;
inline constexpr double tau_offset = 2.0;  // tau = nu + 2
inline constexpr int mc_samples = 20000;
inline constexpr unsigned mc_seed = 20240611u;

inline constexpr double newton_tol = 1e-10;
inline constexpr int newton_max_iter = 12;

}  // namespace kamkdv::defaults
