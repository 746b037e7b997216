#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use liverec::backend::{Backend, BackendEnv};
use liverec::engine::Engine;
use liverec::session::SessionConfig;

pub fn mock_adapter() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_mock-adapter"))
}

pub fn liverec_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_liverec"))
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mock").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn env_in(dir: &Path) -> BackendEnv {
    let mut env = BackendEnv::new(dir);
    env.mock_adapter = mock_adapter();
    env.request_timeout = Duration::from_secs(5);
    env.stop_timeout = Duration::from_secs(5);
    env
}

pub fn engine(id: &str, dir: &Path) -> Engine {
    Engine::new(Backend::builtin(id).unwrap(), env_in(dir)).with_max_steps(80)
}

/// Session configuration for the mock adapter with extra flags.
pub fn mock_config(dir: &Path, flags: &[&str]) -> SessionConfig {
    let mut env = env_in(dir);
    env.adapter_args = flags.iter().map(|s| s.to_string()).collect();
    Backend::builtin("mock").unwrap().prepare(&env).unwrap()
}
