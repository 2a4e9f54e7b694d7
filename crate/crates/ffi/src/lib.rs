//! C ABI for the meanopt solver.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns a
//! [`MeanoptStatus`]; on failure a description is available from
//! [`meanopt_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use meanopt::model::usl_gain;
use meanopt::{
    solve_agent, AgentEvaluation, AgentProfile, LinkState, Mode, NetworkSolution, SelectionPolicy, SolveError,
    SystemParams,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanoptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotConverged = 3,
    OutOfRange = 4,
    Panic = 5,
}

/// Network-wide constants, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MeanoptSystemParams {
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub p_max_w: f64,
    pub snr_threshold: f64,
    pub deadline_s: f64,
    pub rho_min: f64,
    pub base_task_energy_j: f64,
    pub usl_beta: f64,
    pub usl_xi: f64,
    pub switched_cap: f64,
    pub local_cycles_per_bit: f64,
}

impl From<SystemParams> for MeanoptSystemParams {
    fn from(p: SystemParams) -> Self {
        Self {
            bandwidth_hz: p.bandwidth_hz,
            noise_w: p.noise_w,
            p_max_w: p.p_max_w,
            snr_threshold: p.snr_threshold,
            deadline_s: p.deadline_s,
            rho_min: p.rho_min,
            base_task_energy_j: p.base_task_energy_j,
            usl_beta: p.usl_beta,
            usl_xi: p.usl_xi,
            switched_cap: p.switched_cap,
            local_cycles_per_bit: p.local_cycles_per_bit,
        }
    }
}

impl From<MeanoptSystemParams> for SystemParams {
    fn from(p: MeanoptSystemParams) -> Self {
        Self {
            bandwidth_hz: p.bandwidth_hz,
            noise_w: p.noise_w,
            p_max_w: p.p_max_w,
            snr_threshold: p.snr_threshold,
            deadline_s: p.deadline_s,
            rho_min: p.rho_min,
            base_task_energy_j: p.base_task_energy_j,
            usl_beta: p.usl_beta,
            usl_xi: p.usl_xi,
            switched_cap: p.switched_cap,
            local_cycles_per_bit: p.local_cycles_per_bit,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MeanoptAgent {
    pub data_bits: f64,
    pub complexity: f64,
    pub cpu_hz: f64,
    pub channel_gain: f64,
    pub distance_m: f64,
}

impl From<MeanoptAgent> for AgentProfile {
    fn from(a: MeanoptAgent) -> Self {
        Self {
            data_bits: a.data_bits,
            complexity: a.complexity,
            cpu_hz: a.cpu_hz,
            channel_gain: a.channel_gain,
            distance_m: a.distance_m,
        }
    }
}

/// Per-agent outcome. Collaborative-mode fields are NaN when
/// `bs_feasible` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MeanoptAgentResult {
    /// 1 for collaborative mode, 0 for local.
    pub mode: u8,
    pub bs_feasible: bool,
    pub snr: f64,
    pub rho: f64,
    pub power_w: f64,
    pub t_comp: f64,
    pub t_comm: f64,
    pub t_bs: f64,
    pub t_local: f64,
    pub e_comp: f64,
    pub e_comm: f64,
    pub e_bs: f64,
    pub e_local: f64,
    pub delta_save: f64,
}

impl MeanoptAgentResult {
    fn new(link: &LinkState, e: &AgentEvaluation) -> Self {
        let nan = f64::NAN;
        let bs = e.bs;
        Self {
            mode: u8::from(e.mode == Mode::Collaborative),
            bs_feasible: bs.is_some(),
            snr: link.snr,
            rho: bs.map_or(nan, |b| b.rho),
            power_w: bs.map_or(nan, |b| b.power_w),
            t_comp: bs.map_or(nan, |b| b.t_comp),
            t_comm: bs.map_or(nan, |b| b.t_comm),
            t_bs: bs.map_or(nan, |b| b.t_bs),
            t_local: e.t_local,
            e_comp: bs.map_or(nan, |b| b.e_comp),
            e_comm: bs.map_or(nan, |b| b.e_comm),
            e_bs: bs.map_or(nan, |b| b.e_bs),
            e_local: e.e_local,
            delta_save: e.delta_save().unwrap_or(nan),
        }
    }
}

/// Opaque solver handle: system parameters plus mode-selection policy.
pub struct MeanoptSolver {
    sys: SystemParams,
    policy: SelectionPolicy,
}

/// Opaque network solution handle.
pub struct MeanoptSolution {
    solution: NetworkSolution,
    links: Vec<LinkState>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: MeanoptStatus, msg: impl Into<String>) -> MeanoptStatus {
    set_error(msg);
    status
}

fn solve_status(e: SolveError) -> MeanoptStatus {
    let status = match e {
        SolveError::NotConverged { .. } => MeanoptStatus::NotConverged,
        _ => MeanoptStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard<F: FnOnce() -> MeanoptStatus>(f: F) -> MeanoptStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(MeanoptStatus::Panic, "internal panic"))
}

/// Message for the most recent failure on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn meanopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn meanopt_status_str(status: MeanoptStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        MeanoptStatus::Ok => b"ok\0",
        MeanoptStatus::NullPointer => b"null pointer\0",
        MeanoptStatus::InvalidArgument => b"invalid argument\0",
        MeanoptStatus::NotConverged => b"not converged\0",
        MeanoptStatus::OutOfRange => b"out of range\0",
        MeanoptStatus::Panic => b"panic\0",
    };
    s.as_ptr().cast()
}

/// Fill `out` with the default system parameters.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn meanopt_params_default(out: *mut MeanoptSystemParams) -> MeanoptStatus {
    if out.is_null() {
        return fail(MeanoptStatus::NullPointer, "out is null");
    }
    out.write(SystemParams::default().into());
    MeanoptStatus::Ok
}

/// Create a solver. `min_k` is the smallest collaboration scale (the usual
/// value is 2); with `force_collaboration` the all-local outcome is only
/// chosen when no admissible scale exists.
///
/// # Safety
/// `params` must be null or point to a valid struct; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solver_new(
    params: *const MeanoptSystemParams,
    min_k: usize,
    force_collaboration: bool,
    out: *mut *mut MeanoptSolver,
) -> MeanoptStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return fail(MeanoptStatus::NullPointer, "params or out is null");
        }
        let sys: SystemParams = params.read().into();
        if let Err(e) = sys.validate() {
            return fail(MeanoptStatus::InvalidArgument, e.to_string());
        }
        let policy = SelectionPolicy {
            min_k,
            force_collaboration,
            ..Default::default()
        };
        out.write(Box::into_raw(Box::new(MeanoptSolver { sys, policy })));
        MeanoptStatus::Ok
    })
}

/// # Safety
/// `solver` must be null or a handle from [`meanopt_solver_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solver_free(solver: *mut MeanoptSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// USL collaboration gain `G(k)` for `k >= 1`.
///
/// # Safety
/// `solver` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn meanopt_usl_gain(solver: *const MeanoptSolver, k: usize, out: *mut f64) -> MeanoptStatus {
    guard(|| {
        let (Some(solver), false) = (solver.as_ref(), out.is_null()) else {
            return fail(MeanoptStatus::NullPointer, "solver or out is null");
        };
        match usl_gain(&solver.sys, k) {
            Ok(g) => {
                out.write(g);
                MeanoptStatus::Ok
            }
            Err(e) => fail(MeanoptStatus::OutOfRange, e.to_string()),
        }
    })
}

/// Optimal compression ratio and power for one agent, ignoring the SNR gate.
///
/// # Safety
/// `solver` must be a live handle or null; `agent` null or valid for reads;
/// `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solve_agent(
    solver: *const MeanoptSolver,
    agent: *const MeanoptAgent,
    out: *mut MeanoptAgentResult,
) -> MeanoptStatus {
    guard(|| {
        let (Some(solver), Some(agent), false) = (solver.as_ref(), agent.as_ref(), out.is_null()) else {
            return fail(MeanoptStatus::NullPointer, "solver, agent or out is null");
        };
        let agent: AgentProfile = (*agent).into();
        if let Err(e) = agent.validate() {
            return fail(MeanoptStatus::InvalidArgument, e.to_string());
        }
        match solve_agent(&solver.sys, &agent) {
            Ok(sol) => {
                out.write(MeanoptAgentResult::new(&sol.link, &sol.evaluation));
                MeanoptStatus::Ok
            }
            Err(e) => solve_status(e),
        }
    })
}

/// Full joint optimisation over `n` agents.
///
/// # Safety
/// `solver` must be a live handle or null; `agents` must point to `n`
/// readable structs (may be null when `n == 0`); `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solve_network(
    solver: *const MeanoptSolver,
    agents: *const MeanoptAgent,
    n: usize,
    out: *mut *mut MeanoptSolution,
) -> MeanoptStatus {
    guard(|| {
        let Some(solver) = solver.as_ref() else {
            return fail(MeanoptStatus::NullPointer, "solver is null");
        };
        if out.is_null() || (agents.is_null() && n > 0) {
            return fail(MeanoptStatus::NullPointer, "agents or out is null");
        }
        let profiles: Vec<AgentProfile> = if n == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(agents, n).iter().map(|&a| a.into()).collect()
        };
        let result = meanopt::select::gated_candidates(&solver.sys, &profiles)
            .and_then(|(links, evals)| Ok((links, meanopt::select::select_scale(&solver.sys, &evals, &solver.policy)?)));
        match result {
            Ok((links, solution)) => {
                out.write(Box::into_raw(Box::new(MeanoptSolution { solution, links })));
                MeanoptStatus::Ok
            }
            Err(e) => solve_status(e),
        }
    })
}

/// # Safety
/// `solution` must be null or a handle from [`meanopt_solve_network`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solution_free(solution: *mut MeanoptSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of agents in the solution; 0 for a null handle.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solution_len(solution: *const MeanoptSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.n())
}

/// Selected collaboration scale `K*`; 0 means all agents run locally.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solution_k_star(solution: *const MeanoptSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.k_star)
}

/// Total network energy (J); NaN for a null handle.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solution_total_energy(solution: *const MeanoptSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.solution.total_energy)
}

/// # Safety
/// `solution` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn meanopt_solution_agent(
    solution: *const MeanoptSolution,
    index: usize,
    out: *mut MeanoptAgentResult,
) -> MeanoptStatus {
    guard(|| {
        let (Some(s), false) = (solution.as_ref(), out.is_null()) else {
            return fail(MeanoptStatus::NullPointer, "solution or out is null");
        };
        match (s.solution.per_agent.get(index), s.links.get(index)) {
            (Some(e), Some(link)) => {
                out.write(MeanoptAgentResult::new(link, e));
                MeanoptStatus::Ok
            }
            _ => fail(
                MeanoptStatus::OutOfRange,
                format!("agent index {index} out of range for {} agents", s.solution.n()),
            ),
        }
    })
}
