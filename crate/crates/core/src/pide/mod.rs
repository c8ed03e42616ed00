//! Backward finite-difference solvers for the optimal-discretion PIDE.
//!
//! The optimal discretion is a function `h` of time and the miss count (and,
//! for pinned arrivals, the attempt count). Both solvers step explicitly
//! backward from the terminal slice `h(T, D) = 2 gamma D + gamma + alpha`.

mod grid;
mod io;
mod pinned;
mod poisson;
mod surface;

pub use grid::{SolverOptions, TimeGrid};
pub use io::{
    load_surface, load_surface3, save_surface, save_surface3, write_surface3_csv,
    write_surface_csv,
};
pub use pinned::solve_pinned_surface;
pub use poisson::{default_d_max, solve_poisson_surface, Penalties};
pub use surface::{
    terminal_value, DiscretionSurface, DiscretionSurface3, Lookup, SurfaceHeader,
    SURFACE_SCHEMA_VERSION,
};
