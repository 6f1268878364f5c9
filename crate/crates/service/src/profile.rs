//! Backend profiles: which graph, exemplars, templates, oracle and tools a
//! session uses, loadable from TOML and buildable into a [`SessionConfig`].

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use waypoint::assets;
use waypoint::engine::{GraphMode, SessionConfig, DEFAULT_MAX_STEPS};
use waypoint::exemplars::ExemplarStore;
use waypoint::graph::{ActionId, TransitionGraph};
use waypoint::oracle::{Oracle, RemoteConfig, RemoteOracle, ScriptedOracle};
use waypoint::prompting::PromptLibrary;
use waypoint::tools::{BackendKind, HttpToolBackend, LlmQaBackend, MockBackend, ToolBackend, ToolCache, ToolRegistry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Fixture lookup by prompt hash; the shipped fixtures when no file is given.
    Scripted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fixtures: Option<PathBuf>,
        #[serde(default)]
        relaxed: bool,
    },
    Remote(RemoteConfig),
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec::Scripted {
            fixtures: None,
            relaxed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToolsSpec {
    /// Fixture lookup; the shipped tool fixtures when no file is given.
    Mock {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fixtures: Option<PathBuf>,
    },
    /// Live adapter endpoint; `llm_qa` is answered by the oracle.
    Http {
        endpoint: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token_env: Option<String>,
        #[serde(default = "default_tool_timeout")]
        timeout_secs: u64,
    },
}

fn default_tool_timeout() -> u64 {
    30
}

impl Default for ToolsSpec {
    fn default() -> Self {
        ToolsSpec::Mock { fixtures: None }
    }
}

/// Every field is optional; unset fields fall back to the shipped defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplars: Option<PathBuf>,
    /// Directory holding `manifest.toml` and the template files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tools: Option<ToolsSpec>,
    /// Read-through tool cache file, created on first save.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<GraphMode>,
    /// 0 disables the planner guard.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplar_budget: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("missing {what} file: {}", path.display())]
    Missing { what: &'static str, path: PathBuf },
    #[error("invalid {what} file {}: {message}", path.display())]
    Invalid {
        what: &'static str,
        path: PathBuf,
        message: String,
    },
    #[error("backend setup failed: {0}")]
    Backend(String),
}

fn existing(what: &'static str, path: &Path) -> Result<(), ProfileError> {
    if path.exists() {
        Ok(())
    } else {
        Err(ProfileError::Missing {
            what,
            path: path.to_path_buf(),
        })
    }
}

fn read(what: &'static str, path: &Path) -> Result<String, ProfileError> {
    existing(what, path)?;
    std::fs::read_to_string(path).map_err(|e| ProfileError::Invalid {
        what,
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn invalid<'a>(what: &'static str, path: &'a Path) -> impl FnOnce(String) -> ProfileError + 'a {
    move |message| ProfileError::Invalid {
        what,
        path: path.to_path_buf(),
        message,
    }
}

impl Profile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProfileError> {
        let path = path.as_ref();
        let text = read("profile", path)?;
        toml::from_str(&text).map_err(|e| invalid("profile", path)(e.message().to_string()))
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: Profile) -> Profile {
        Profile {
            graph: other.graph.or(self.graph),
            exemplars: other.exemplars.or(self.exemplars),
            templates: other.templates.or(self.templates),
            oracle: other.oracle.or(self.oracle),
            tools: other.tools.or(self.tools),
            tool_cache: other.tool_cache.or(self.tool_cache),
            mode: other.mode.or(self.mode),
            max_steps: other.max_steps.or(self.max_steps),
            exemplar_budget: other.exemplar_budget.or(self.exemplar_budget),
        }
    }

    /// Resolves relative paths against `base`.
    pub fn relative_to(mut self, base: &Path) -> Profile {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.graph);
        fix(&mut self.exemplars);
        fix(&mut self.templates);
        fix(&mut self.tool_cache);
        if let Some(OracleSpec::Scripted { fixtures, .. }) = &mut self.oracle {
            fix(fixtures);
        }
        if let Some(ToolsSpec::Mock { fixtures }) = &mut self.tools {
            fix(fixtures);
        }
        self
    }

    pub fn build_oracle(&self) -> Result<Arc<dyn Oracle>, ProfileError> {
        Ok(match self.oracle.clone().unwrap_or_default() {
            OracleSpec::Scripted { fixtures, relaxed } => {
                let oracle = match &fixtures {
                    None => assets::scripted_oracle(),
                    Some(p) => ScriptedOracle::load(&read("oracle fixture", p)?)
                        .map_err(|e| invalid("oracle fixture", p)(e.to_string()))?,
                };
                Arc::new(oracle.relaxed(relaxed))
            }
            OracleSpec::Remote(config) => {
                Arc::new(RemoteOracle::new(config).map_err(|e| ProfileError::Backend(e.to_string()))?)
            }
        })
    }

    pub fn build_registry(&self, oracle: Arc<dyn Oracle>) -> Result<ToolRegistry, ProfileError> {
        let prompts = self.build_prompts()?;
        let mut registry = match self.tools.clone().unwrap_or_default() {
            ToolsSpec::Mock { fixtures } => {
                let backend = match &fixtures {
                    None => assets::mock_backend(),
                    Some(p) => {
                        MockBackend::load(&read("tool fixture", p)?).map_err(|e| invalid("tool fixture", p)(e.to_string()))?
                    }
                };
                ToolRegistry::builtin(prompts.instructions(), Arc::new(backend), BackendKind::Mock)
            }
            ToolsSpec::Http {
                endpoint,
                token_env,
                timeout_secs,
            } => {
                let backend = HttpToolBackend::new(endpoint, token_env.as_deref(), Duration::from_secs(timeout_secs))
                    .map_err(|e| ProfileError::Backend(e.to_string()))?;
                let mut r = ToolRegistry::builtin(prompts.instructions(), Arc::new(backend), BackendKind::Live);
                let llm: Arc<dyn ToolBackend> = Arc::new(LlmQaBackend::new(oracle));
                r.set_backend(&ActionId::from("llm_qa"), llm)
                    .map_err(|e| ProfileError::Backend(e.to_string()))?;
                r
            }
        };
        if let Some(p) = &self.tool_cache {
            let cache = if p.exists() {
                ToolCache::load(&read("tool cache", p)?).map_err(|e| invalid("tool cache", p)(e.to_string()))?
            } else {
                ToolCache::new()
            };
            registry = registry.with_cache(Arc::new(cache));
        }
        Ok(registry)
    }

    fn build_prompts(&self) -> Result<PromptLibrary, ProfileError> {
        match &self.templates {
            None => Ok(assets::default_prompts()),
            Some(dir) => {
                existing("template manifest", &dir.join("manifest.toml"))?;
                PromptLibrary::load_dir(dir).map_err(|e| invalid("template", dir)(e.to_string()))
            }
        }
    }

    /// Loads every referenced file and wires the backends.
    pub fn build(&self) -> Result<SessionConfig, ProfileError> {
        let oracle = self.build_oracle()?;
        let registry = self.build_registry(oracle.clone())?;
        let mut config = SessionConfig::new(oracle, Arc::new(registry));
        if let Some(p) = &self.graph {
            let g = TransitionGraph::load(&read("graph", p)?).map_err(|e| invalid("graph", p)(e.to_string()))?;
            config = config.with_graph(g);
        }
        if let Some(p) = &self.exemplars {
            let store = ExemplarStore::load(&read("exemplar", p)?).map_err(|e| invalid("exemplar", p)(e.to_string()))?;
            config.exemplars = Arc::new(store);
        }
        config.prompts = Arc::new(self.build_prompts()?);
        config.mode = self.mode.unwrap_or_default();
        config.max_steps = match self.max_steps {
            None => Some(DEFAULT_MAX_STEPS),
            Some(0) => None,
            Some(n) => Some(n),
        };
        if let Some(b) = self.exemplar_budget {
            config.exemplar_budget = b;
        }
        config
            .validate()
            .map_err(|e| ProfileError::Backend(e.to_string()))?;
        Ok(config)
    }

    /// Writes the tool cache back, if one is configured.
    pub fn save_cache(&self, config: &SessionConfig) -> std::io::Result<()> {
        match (&self.tool_cache, config.registry.cache()) {
            (Some(p), Some(cache)) => cache.save(p),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_is_the_mock_corpus() {
        let config = Profile::default().build().unwrap();
        assert_eq!(config.mode, GraphMode::Constrained);
        assert_eq!(config.max_steps, Some(DEFAULT_MAX_STEPS));
        assert_eq!(config.registry.len(), 9);
        let sc = assets::scenario(assets::GOLDEN_SCENARIO).unwrap();
        let r = waypoint::run(&config, sc.question());
        assert_eq!(r.answer.as_deref(), Some(assets::GOLDEN_ANSWER));
    }

    #[test]
    fn missing_files_are_named() {
        let p = Profile {
            graph: Some("/nonexistent/graph.toml".into()),
            ..Profile::default()
        };
        let err = p.build().unwrap_err().to_string();
        assert_eq!(err, "missing graph file: /nonexistent/graph.toml");
        let p = Profile {
            oracle: Some(OracleSpec::Scripted {
                fixtures: Some("/nonexistent/oracle.jsonl".into()),
                relaxed: false,
            }),
            ..Profile::default()
        };
        assert!(p.build().unwrap_err().to_string().starts_with("missing oracle fixture file"));
    }

    #[test]
    fn parses_toml_and_overlays() {
        let file: Profile = toml::from_str(
            r#"
            mode = "unconstrained"
            max_steps = 0
            [oracle]
            kind = "remote"
            endpoint = "http://localhost:9000/complete"
            token_env = "ORACLE_TOKEN"
            [tools]
            kind = "http"
            endpoint = "http://localhost:9001/tools"
            "#,
        )
        .unwrap();
        assert!(matches!(file.oracle, Some(OracleSpec::Remote(ref c)) if c.retries == 3));
        assert!(matches!(file.tools, Some(ToolsSpec::Http { timeout_secs: 30, .. })));
        let flags = Profile {
            mode: Some(GraphMode::Constrained),
            exemplar_budget: Some(4),
            ..Profile::default()
        };
        let merged = flags.overlay(file);
        assert_eq!(merged.mode, Some(GraphMode::Unconstrained));
        assert_eq!(merged.exemplar_budget, Some(4));
        let config = merged.build().unwrap();
        assert_eq!(config.max_steps, None);
        assert_eq!(config.exemplar_budget, 4);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<Profile>("grpah = \"x\"").is_err());
    }

    #[test]
    fn relative_paths_resolve_against_base() {
        let p = Profile {
            graph: Some("g.toml".into()),
            oracle: Some(OracleSpec::Scripted {
                fixtures: Some("o.jsonl".into()),
                relaxed: true,
            }),
            ..Profile::default()
        }
        .relative_to(Path::new("/etc/waypoint"));
        assert_eq!(p.graph.as_deref(), Some(Path::new("/etc/waypoint/g.toml")));
        assert!(
            matches!(p.oracle, Some(OracleSpec::Scripted { fixtures: Some(ref f), .. }) if f == Path::new("/etc/waypoint/o.jsonl"))
        );
    }
}
