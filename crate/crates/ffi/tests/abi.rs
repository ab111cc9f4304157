use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use orbitope_mpc_ffi::*;

fn scenario_path(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = ompc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn plan_round_trip() {
    unsafe {
        let mut scen = ptr::null_mut();
        assert_eq!(ompc_scenario_load(scenario_path("dubins.toml").as_ptr(), &mut scen), OmpcStatus::Ok);
        let mut dim = 0;
        assert_eq!(ompc_scenario_dim(scen, &mut dim), OmpcStatus::Ok);
        assert_eq!(dim, 2);

        let mut traj = ptr::null_mut();
        assert_eq!(ompc_plan(scen, &mut traj), OmpcStatus::Ok);
        assert_eq!(ompc_trajectory_len(traj), 21);
        assert_eq!(ompc_trajectory_dim(traj), 2);

        let mut pos = [0.0; 2];
        let mut rot = [0.0; 4];
        let mut det = 0.0;
        assert_eq!(ompc_trajectory_row(traj, 20, pos.as_mut_ptr(), rot.as_mut_ptr(), &mut det), OmpcStatus::Ok);
        assert!((pos[0] - 5.0).abs() < 1e-5 && (pos[1] - 10.0).abs() < 1e-5, "{pos:?}");
        // planar rows keep the [a -b; b a] form
        assert!((rot[0] - rot[3]).abs() < 1e-12 && (rot[1] + rot[2]).abs() < 1e-12);
        assert!((det - (rot[0] * rot[3] - rot[1] * rot[2])).abs() < 1e-12);

        let mut input = [0.0; 2];
        let mut len = 0;
        assert_eq!(ompc_trajectory_input(traj, 0, input.as_mut_ptr(), 2, &mut len), OmpcStatus::Ok);
        assert_eq!(len, 2);
        assert_eq!(ompc_trajectory_input(traj, 0, input.as_mut_ptr(), 1, &mut len), OmpcStatus::InvalidInput);
        assert_eq!(ompc_trajectory_row(traj, 21, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), OmpcStatus::InvalidInput);
        assert!(last_error().contains("out of range"));

        let mut obj = f64::NAN;
        assert_eq!(ompc_trajectory_objective(traj, &mut obj), OmpcStatus::Ok);
        assert!(obj.is_finite() && obj > 0.0);

        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("t.csv");
        let c = CString::new(csv.to_str().unwrap()).unwrap();
        assert_eq!(ompc_trajectory_write_csv(traj, c.as_ptr()), OmpcStatus::Ok);
        assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 22);

        ompc_trajectory_free(traj);
        ompc_scenario_free(scen);
    }
}

#[test]
fn bad_inputs_map_to_codes() {
    unsafe {
        let mut scen = ptr::null_mut();
        let text = CString::new("name = \"x\"\ndim = 2\nhorizon = 0\n").unwrap();
        assert_eq!(ompc_scenario_parse(text.as_ptr(), &mut scen), OmpcStatus::InvalidInput);
        assert!(scen.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(ompc_scenario_parse(ptr::null(), &mut scen), OmpcStatus::NullPointer);
        let missing = CString::new("/nonexistent/scenario.toml").unwrap();
        assert_eq!(ompc_scenario_load(missing.as_ptr(), &mut scen), OmpcStatus::Io);

        let mut traj = ptr::null_mut();
        assert_eq!(ompc_plan(ptr::null(), &mut traj), OmpcStatus::NullPointer);
        assert_eq!(ompc_trajectory_len(ptr::null()), 0);

        assert_eq!(ompc_scenario_load(scenario_path("dubins.toml").as_ptr(), &mut scen), OmpcStatus::Ok);
        assert_eq!(ompc_scenario_set_tol(scen, 0.0), OmpcStatus::InvalidInput);
        // no [rhc] section in the one-shot scenario
        assert_eq!(ompc_rhc(scen, &mut traj), OmpcStatus::InvalidInput);
        assert!(traj.is_null());
        ompc_scenario_free(scen);

        ompc_scenario_free(ptr::null_mut());
        ompc_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn rhc_step_limit_still_returns_the_run() {
    unsafe {
        let mut scen = ptr::null_mut();
        let base = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/dubins_rhc_static.toml")).unwrap();
        let text = CString::new(base.replace("max_steps = 40", "max_steps = 2").replace("lookahead = 20", "lookahead = 4")).unwrap();
        assert_eq!(ompc_scenario_parse(text.as_ptr(), &mut scen), OmpcStatus::Ok);
        let mut traj = ptr::null_mut();
        assert_eq!(ompc_rhc(scen, &mut traj), OmpcStatus::IterLimit);
        assert_eq!(ompc_trajectory_len(traj), 3);
        ompc_trajectory_free(traj);
        ompc_scenario_free(scen);
    }
}

#[test]
fn projection_matches_core() {
    let m = [0.3, -1.2, 0.4, 0.9, 0.2, -0.5, 0.1, 0.7, 1.1];
    let mut r = [0.0; 9];
    let (mut d, mut unique) = (0.0, false);
    let status = unsafe { ompc_project_to_son(3, m.as_ptr(), r.as_mut_ptr(), &mut d, &mut unique) };
    assert_eq!(status, OmpcStatus::Ok);
    let core = orbitope_mpc::cones::project_to_son(&orbitope_mpc::numerics::SmallMatrix::from_row_major(3, 3, m.to_vec()).unwrap()).unwrap();
    assert_eq!(&r[..], core.rotation.as_slice());
    assert_eq!(d, core.distance);
    assert!(unique);
    let status = unsafe { ompc_project_to_son(4, m.as_ptr(), r.as_mut_ptr(), ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(status, OmpcStatus::InvalidInput);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(ompc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
