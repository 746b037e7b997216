//! The probe pipeline for one backend: parse, compile, load, record.

use std::path::PathBuf;
use std::time::Instant;

use liverec_core::recorder::record;
use liverec_core::{parse_annotation, ProbeRequest, StackRecording, DEFAULT_MAX_STEPS};
use sha2::{Digest, Sha256};

use crate::backend::{Backend, BackendEnv, BackendError, CompileError, LoadError};
use crate::schema::{Outcome, ProbeResult};
use crate::session::{Session, SessionError, SessionStatus};

/// `LIVEREC_MAX_STEPS`, or the default snapshot cap.
pub fn max_steps_from_env() -> usize {
    std::env::var("LIVEREC_MAX_STEPS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|n| *n > 0)
        .unwrap_or(DEFAULT_MAX_STEPS)
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("writing source: {0}")]
    Io(#[from] std::io::Error),
}

/// How long getting code into the agent took.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadTimings {
    pub compile_ms: f64,
    pub load_ms: f64,
    /// False when the code was already loaded and nothing ran.
    pub reloaded: bool,
}

pub struct Engine {
    backend: Backend,
    env: BackendEnv,
    max_steps: usize,
    session: Option<Session>,
    /// Hash of the loaded code and the session generation it was loaded into.
    loaded: Option<(String, u64)>,
}

impl Engine {
    pub fn new(backend: Backend, env: BackendEnv) -> Self {
        Self {
            backend,
            env,
            max_steps: max_steps_from_env(),
            session: None,
            loaded: None,
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn set_max_steps(&mut self, max_steps: usize) {
        self.max_steps = max_steps;
    }

    /// The session, launched (or relaunched when dead) on demand.
    pub fn session(&mut self) -> Result<&mut Session, EngineError> {
        let alive = self
            .session
            .as_ref()
            .is_some_and(|s| s.status() != SessionStatus::Dead);
        if !alive {
            self.session = None;
            let config = self.backend.prepare(&self.env)?;
            log::info!("launching {} session", self.backend.id());
            let session = Session::launch_with(config)?;
            self.session = Some(session);
        }
        Ok(self.session.as_mut().expect("session just ensured"))
    }

    pub fn shutdown(&mut self) {
        if let Some(mut s) = self.session.take() {
            s.shutdown();
        }
        self.loaded = None;
    }

    /// Compiles and loads `code` unless the same code is already loaded in
    /// the current session.
    pub fn prepare_code(&mut self, code: &str) -> Result<LoadTimings, EngineError> {
        let key = hex::encode(Sha256::digest(code.as_bytes()));
        let live_generation = self
            .session
            .as_ref()
            .filter(|s| s.status() != SessionStatus::Dead)
            .map(Session::generation);
        if let (Some(generation), Some((loaded, at))) = (live_generation, &self.loaded) {
            if *loaded == key && *at == generation {
                return Ok(LoadTimings::default());
            }
        }
        let source = self.backend.write_source(&self.env, &key, code)?;
        let started = Instant::now();
        let artifact: PathBuf = self.backend.compile(&source)?;
        let compile_ms = if self.backend.has_compile() { ms_since(started) } else { 0.0 };
        let started = Instant::now();
        let backend = self.backend.clone();
        let session = self.session()?;
        let loaded = backend.load_code(session, &artifact);
        let generation = session.generation();
        if let Err(e) = loaded {
            if matches!(&e, LoadError::Session(_)) {
                self.shutdown();
            }
            return Err(e.into());
        }
        self.loaded = Some((key, generation));
        Ok(LoadTimings {
            compile_ms,
            load_ms: ms_since(started),
            reloaded: true,
        })
    }

    /// Records `probe` against whatever code is loaded.
    pub fn record(&mut self, probe: &ProbeRequest) -> Result<StackRecording, EngineError> {
        let profile = self.backend.profile();
        let max_steps = self.max_steps;
        let session = self.session()?;
        let result = record(session, &profile, probe, max_steps);
        for msg in session.take_buffered() {
            log::debug!("unsolicited: {}", serde_json::to_string(&msg.to_value()).unwrap_or_default());
        }
        result.map_err(|e| {
            self.shutdown();
            e.into()
        })
    }

    /// Runs the whole pipeline on `source`.
    pub fn submit(&mut self, source: &str) -> ProbeResult {
        let started = Instant::now();
        let language = self.backend.id().to_string();
        let elapsed = || ms_since(started);
        let probe = match parse_annotation(source, self.backend.comment_marker()) {
            Ok(Some(p)) => p.for_language(&language),
            Ok(None) => return ProbeResult::error(&language, Outcome::AnnotationError, "no probe", None, elapsed()),
            Err(e) => return ProbeResult::error(&language, Outcome::AnnotationError, e.to_string(), None, elapsed()),
        };
        let outcome = self
            .prepare_code(&probe.code_without_annotation())
            .and_then(|_| self.record(&probe));
        match outcome {
            Ok(rec) => ProbeResult::recording(&language, &probe, &rec, elapsed()),
            Err(EngineError::Compile(e)) => {
                ProbeResult::error(&language, Outcome::CompileError, e.diagnostics, Some(&probe), elapsed())
            }
            Err(e) => {
                log::warn!("{language} probe failed: {e}");
                ProbeResult::error(&language, Outcome::EngineError, e.to_string(), Some(&probe), elapsed())
            }
        }
    }
}

impl Drop for Engine {
    fn drop(&mut self) {
        self.shutdown();
    }
}

pub(crate) fn ms_since(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1000.0
}
