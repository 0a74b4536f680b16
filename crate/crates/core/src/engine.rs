//! The whole pipeline behind one handle.

use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, RenderError};
use crate::explain::{build_prompt, ExplainMode, Explainer, ExplanationResult};
use crate::factors::Thresholds;
use crate::intake::{validate, HealthIndicators, Issue};
use crate::recommend::{assemble, build_profile, Explanations, Recommendation, UserProfile};
use crate::risk::RiskCalibration;

/// Shared, swappable catalog. Readers keep the `Arc` they got; a reload
/// only affects later requests.
#[derive(Clone, Debug)]
pub struct CatalogHandle(Arc<RwLock<Arc<Catalog>>>);

impl CatalogHandle {
    pub fn new(catalog: Catalog) -> Self {
        Self(Arc::new(RwLock::new(Arc::new(catalog))))
    }

    pub fn current(&self) -> Arc<Catalog> {
        self.0.read().unwrap().clone()
    }

    pub fn replace(&self, catalog: Catalog) -> Arc<Catalog> {
        std::mem::replace(&mut *self.0.write().unwrap(), Arc::new(catalog))
    }
}

/// Profile plus the checks a caller should see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    #[serde(flatten)]
    pub profile: UserProfile,
    pub note: String,
    pub warnings: Vec<Issue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendOutcome {
    pub recommendation: Recommendation,
    /// Present when generation was attempted.
    pub explanation: Option<ExplanationResult>,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("catalog cannot be rendered for this person: {0}")]
    Render(#[from] RenderError),
}

#[derive(Clone)]
pub struct Engine {
    thresholds: Thresholds,
    calibration: Arc<RiskCalibration>,
    catalog: CatalogHandle,
    explainer: Explainer,
}

impl Engine {
    pub fn new(thresholds: Thresholds, calibration: RiskCalibration, catalog: Catalog) -> Self {
        Self {
            thresholds,
            calibration: Arc::new(calibration),
            catalog: CatalogHandle::new(catalog),
            explainer: Explainer::disabled(),
        }
    }

    /// Default thresholds, shipped calibration and shipped catalog.
    pub fn shipped() -> Self {
        Self::new(
            Thresholds::default(),
            RiskCalibration::shipped(),
            Catalog::shipped(),
        )
    }

    pub fn with_explainer(mut self, explainer: Explainer) -> Self {
        self.explainer = explainer;
        self
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn calibration(&self) -> &RiskCalibration {
        &self.calibration
    }

    pub fn catalog(&self) -> Arc<Catalog> {
        self.catalog.current()
    }

    pub fn catalog_handle(&self) -> &CatalogHandle {
        &self.catalog
    }

    pub fn explainer(&self) -> &Explainer {
        &self.explainer
    }

    pub fn profile(&self, ind: &HealthIndicators) -> UserProfile {
        build_profile(ind, &self.thresholds, &self.calibration)
    }

    pub fn assess(&self, ind: &HealthIndicators) -> Assessment {
        let profile = self.profile(ind);
        Assessment {
            note: profile.risk.applicability.note(),
            profile,
            warnings: validate(ind).warnings,
        }
    }

    /// Recommendation with catalog explanations only. Fully deterministic
    /// apart from the timestamp.
    pub fn recommend_fallback(
        &self,
        ind: &HealthIndicators,
    ) -> Result<Recommendation, EngineError> {
        let profile = self.profile(ind);
        Ok(assemble(
            &profile,
            ind,
            &self.catalog(),
            &Explanations::fallback(),
        )?)
    }

    pub async fn recommend(
        &self,
        ind: &HealthIndicators,
        mode: ExplainMode,
    ) -> Result<RecommendOutcome, EngineError> {
        self.recommend_with(ind, mode, false).await
    }

    pub async fn recommend_with(
        &self,
        ind: &HealthIndicators,
        mode: ExplainMode,
        bypass_cache: bool,
    ) -> Result<RecommendOutcome, EngineError> {
        let profile = self.profile(ind);
        let catalog = self.catalog();
        let explanation = match (mode, build_prompt(&profile, ind)) {
            (ExplainMode::Llm, Some(prompt)) => Some(
                self.explainer
                    .request_explanations(&prompt, bypass_cache)
                    .await,
            ),
            _ => None,
        };
        let expl = explanation
            .as_ref()
            .map(|e| e.to_explanations())
            .unwrap_or_default();
        let recommendation = assemble(&profile, ind, &catalog, &expl)?;
        Ok(RecommendOutcome {
            recommendation,
            explanation,
        })
    }
}
