//! Guideline-derived recommendation content.
//!
//! A catalog is one JSON document per language holding the item templates,
//! a few section headers, age-banded target values and the impact-rank
//! table used to order modifiable factors. Completeness is checked at load
//! time so that assembly can never miss an item for a present factor.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::factors::{FactorVector, RiskFactor};
use crate::intake::{fmt_number, HealthIndicators, Indicator};
use crate::risk::{RiskCategory, RiskEstimate};

const SHIPPED_CATALOG: &str = include_str!("../data/catalog.en.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ItemKind {
    /// Strategic goal, keyed by class 1..=5.
    EsG,
    /// Tactical goal, keyed by factor.
    EsR,
    Inf,
    Plan,
    ExplFallback,
}

impl ItemKind {
    pub const ALL: [ItemKind; 5] = [
        ItemKind::EsG,
        ItemKind::EsR,
        ItemKind::Inf,
        ItemKind::Plan,
        ItemKind::ExplFallback,
    ];

    pub fn keys(self) -> std::ops::RangeInclusive<u8> {
        match self {
            ItemKind::EsG => 1..=5,
            _ => 1..=13,
        }
    }

    fn key_noun(self) -> &'static str {
        match self {
            ItemKind::EsG => "class",
            _ => "factor",
        }
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Values a template may refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Sex,
    Age,
    Height,
    Weight,
    Bmi,
    TotalCholesterol,
    NonHdl,
    Sbp,
    BloodPressure,
    Glucose,
    Category,
    CvRisk,
}

impl Builtin {
    const ALL: [Builtin; 12] = [
        Builtin::Sex,
        Builtin::Age,
        Builtin::Height,
        Builtin::Weight,
        Builtin::Bmi,
        Builtin::TotalCholesterol,
        Builtin::NonHdl,
        Builtin::Sbp,
        Builtin::BloodPressure,
        Builtin::Glucose,
        Builtin::Category,
        Builtin::CvRisk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sex => "sex",
            Builtin::Age => "age",
            Builtin::Height => "height",
            Builtin::Weight => "weight",
            Builtin::Bmi => "bmi",
            Builtin::TotalCholesterol => "total_cholesterol",
            Builtin::NonHdl => "non_hdl",
            Builtin::Sbp => "sbp",
            Builtin::BloodPressure => "blood_pressure",
            Builtin::Glucose => "glucose",
            Builtin::Category => "category",
            Builtin::CvRisk => "cvrisk",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    fn resolve(self, ctx: &RenderContext<'_>) -> Option<String> {
        let ind = ctx.indicators;
        let measure = |f: Indicator| ind.provided_value(f).map(fmt_number);
        match self {
            Builtin::Sex => ind
                .is_provided(Indicator::Sex)
                .then(|| if ind.sex_is_male() { "male" } else { "female" }.to_string()),
            Builtin::Age => measure(Indicator::Age),
            Builtin::Height => measure(Indicator::Height),
            Builtin::Weight => measure(Indicator::Weight),
            Builtin::Bmi => {
                (ind.get(Indicator::Height) > 0.0).then(|| format!("{:.1}", ctx.factors.bmi))
            }
            Builtin::TotalCholesterol => measure(Indicator::TotalCholesterol),
            Builtin::NonHdl => measure(Indicator::NonHdlCholesterol),
            Builtin::Sbp => measure(Indicator::SystolicBp),
            Builtin::BloodPressure => ind
                .is_provided(Indicator::SystolicBp)
                .then(|| ind.blood_pressure_display()),
            Builtin::Glucose => measure(Indicator::Glucose),
            Builtin::Category => Some(ctx.risk.category.label().to_string()),
            Builtin::CvRisk => ctx.risk.cvrisk.map(|r| format!("{r:.1}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Builtin(Builtin),
    Band(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(Slot),
}

/// A parsed template. `{name}` is a placeholder; `{{` and `}}` are literal
/// braces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown placeholder `{{{0}}}`")]
    UnknownPlaceholder(String),
    #[error("unterminated placeholder starting at byte {0}")]
    Unterminated(usize),
    #[error("unmatched `}}` at byte {0}")]
    StrayBrace(usize),
}

impl Template {
    /// Parses `source`, accepting builtin placeholder names and `bands`.
    pub fn parse(
        source: &str,
        bands: &BTreeMap<String, Vec<AgeBand>>,
    ) -> Result<Self, TemplateError> {
        let mut segments = Vec::new();
        let mut text = String::new();
        let mut chars = source.char_indices().peekable();
        while let Some((pos, c)) = chars.next() {
            match c {
                '{' if chars.peek().map(|(_, n)| *n) == Some('{') => {
                    chars.next();
                    text.push('{');
                }
                '}' if chars.peek().map(|(_, n)| *n) == Some('}') => {
                    chars.next();
                    text.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some((_, '}')) => break,
                            Some((_, ch)) => name.push(ch),
                            None => return Err(TemplateError::Unterminated(pos)),
                        }
                    }
                    let name = name.trim();
                    let slot = if let Some(b) = Builtin::from_name(name) {
                        Slot::Builtin(b)
                    } else if bands.contains_key(name) {
                        Slot::Band(name.to_string())
                    } else {
                        return Err(TemplateError::UnknownPlaceholder(name.to_string()));
                    };
                    if !text.is_empty() {
                        segments.push(Segment::Text(std::mem::take(&mut text)));
                    }
                    segments.push(Segment::Slot(slot));
                }
                '}' => return Err(TemplateError::StrayBrace(pos)),
                _ => text.push(c),
            }
        }
        if !text.is_empty() {
            segments.push(Segment::Text(text));
        }
        Ok(Self {
            source: source.to_string(),
            segments,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot(Slot::Builtin(b)) => Some(b.name()),
            Segment::Slot(Slot::Band(name)) => Some(name.as_str()),
            Segment::Text(_) => None,
        })
    }

    fn render(
        &self,
        ctx: &RenderContext<'_>,
        bands: &BTreeMap<String, Vec<AgeBand>>,
    ) -> Result<String, RenderError> {
        let mut out = String::with_capacity(self.source.len());
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(Slot::Builtin(b)) => {
                    let v = b
                        .resolve(ctx)
                        .ok_or(RenderError::Unresolved(b.name().to_string()))?;
                    out.push_str(&v);
                }
                Segment::Slot(Slot::Band(name)) => {
                    let age = ctx.indicators.age();
                    let v = bands
                        .get(name)
                        .and_then(|b| band_value(b, age))
                        .ok_or_else(|| RenderError::Unresolved(name.clone()))?;
                    out.push_str(v);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("placeholder `{{{0}}}` has no value for this person")]
    Unresolved(String),
    #[error("catalog has no {kind} item for key {key}")]
    MissingItem { kind: ItemKind, key: u8 },
}

/// A value that applies from `from_age` up to the next band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBand {
    pub from_age: f64,
    pub value: String,
}

fn band_value(bands: &[AgeBand], age: f64) -> Option<&str> {
    bands
        .iter()
        .filter(|b| b.from_age <= age)
        .max_by(|a, b| a.from_age.total_cmp(&b.from_age))
        .map(|b| b.value.as_str())
}

/// Everything a template can draw on.
#[derive(Debug, Clone, Copy)]
pub struct RenderContext<'a> {
    pub indicators: &'a HealthIndicators,
    pub factors: &'a FactorVector,
    pub risk: &'a RiskEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentItem {
    pub kind: ItemKind,
    pub key: u8,
    pub lang: String,
    pub template: Template,
}

/// Impact ranks for the modifiable factors 6..=13; a smaller rank means a
/// larger contribution to CVD.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<u8, u32>", into = "BTreeMap<u8, u32>")]
pub struct PureRankTable {
    ranks: BTreeMap<u8, u32>,
}

impl PureRankTable {
    pub fn rank(&self, factor: RiskFactor) -> Option<u32> {
        self.ranks.get(&(factor.index() as u8)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RiskFactor, u32)> + '_ {
        self.ranks
            .iter()
            .filter_map(|(k, v)| RiskFactor::from_index(*k as usize).map(|f| (f, *v)))
    }
}

impl TryFrom<BTreeMap<u8, u32>> for PureRankTable {
    type Error = String;

    fn try_from(ranks: BTreeMap<u8, u32>) -> Result<Self, Self::Error> {
        for key in ranks.keys() {
            if !(6..=13).contains(key) {
                return Err(format!(
                    "rank given for factor {key}, only factors 6-13 are ranked"
                ));
            }
        }
        for factor in 6u8..=13 {
            match ranks.get(&factor) {
                None => return Err(format!("rank for factor {factor} absent")),
                Some(0) => return Err(format!("rank for factor {factor} must be positive")),
                Some(_) => {}
            }
        }
        Ok(Self { ranks })
    }
}

impl From<PureRankTable> for BTreeMap<u8, u32> {
    fn from(t: PureRankTable) -> Self {
        t.ranks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDocument {
    pub kind: ItemKind,
    pub key: u8,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

/// Wire form of a catalog file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDocument {
    pub version: String,
    pub language: String,
    /// Opens the information section; usually mentions `{category}`.
    pub category_statement: String,
    /// Replaces `category_statement` when no estimate could be made.
    pub category_not_assessed: String,
    pub plan_preamble: String,
    #[serde(default)]
    pub age_bands: BTreeMap<String, Vec<AgeBand>>,
    pub ranks: PureRankTable,
    pub items: Vec<ItemDocument>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog is not valid: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("could not read catalog: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog version is empty")]
    MissingVersion,
    #[error("{kind} for {} {key} absent", kind.key_noun())]
    Missing { kind: ItemKind, key: u8 },
    #[error("{kind} for {} {key} given twice", kind.key_noun())]
    Duplicate { kind: ItemKind, key: u8 },
    #[error("{kind} key {key} out of range")]
    KeyOutOfRange { kind: ItemKind, key: u8 },
    #[error("{location}: text is empty")]
    EmptyText { location: String },
    #[error("{location}: {source}")]
    Template {
        location: String,
        source: TemplateError,
    },
    #[error("age band `{0}` shadows a builtin placeholder or has no bands")]
    BadBand(String),
}

/// A loaded, complete catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    version: String,
    language: String,
    category_statement: Template,
    category_not_assessed: Template,
    plan_preamble: Template,
    age_bands: BTreeMap<String, Vec<AgeBand>>,
    ranks: PureRankTable,
    items: BTreeMap<(ItemKind, u8), ContentItem>,
}

/// Parses and checks a catalog document.
pub fn load_catalog(text: &str) -> Result<Catalog, CatalogError> {
    let doc: CatalogDocument = serde_json::from_str(text)?;
    Catalog::from_document(doc)
}

impl Catalog {
    pub fn from_document(doc: CatalogDocument) -> Result<Self, CatalogError> {
        if doc.version.trim().is_empty() {
            return Err(CatalogError::MissingVersion);
        }
        for (name, bands) in &doc.age_bands {
            if bands.is_empty() || Builtin::from_name(name).is_some() {
                return Err(CatalogError::BadBand(name.clone()));
            }
        }
        let bands = &doc.age_bands;
        let header = |location: &str, text: &str| -> Result<Template, CatalogError> {
            if text.trim().is_empty() {
                return Err(CatalogError::EmptyText {
                    location: location.into(),
                });
            }
            Template::parse(text, bands).map_err(|source| CatalogError::Template {
                location: location.into(),
                source,
            })
        };
        let category_statement = header("category_statement", &doc.category_statement)?;
        let category_not_assessed = header("category_not_assessed", &doc.category_not_assessed)?;
        let plan_preamble = header("plan_preamble", &doc.plan_preamble)?;

        let mut items = BTreeMap::new();
        for item in &doc.items {
            if !item.kind.keys().contains(&item.key) {
                return Err(CatalogError::KeyOutOfRange {
                    kind: item.kind,
                    key: item.key,
                });
            }
            let location = format!("{}({})", item.kind, item.key);
            let template = header(&location, &item.text)?;
            let content = ContentItem {
                kind: item.kind,
                key: item.key,
                lang: item.lang.clone().unwrap_or_else(|| doc.language.clone()),
                template,
            };
            if items.insert((item.kind, item.key), content).is_some() {
                return Err(CatalogError::Duplicate {
                    kind: item.kind,
                    key: item.key,
                });
            }
        }
        for kind in ItemKind::ALL {
            for key in kind.keys() {
                if !items.contains_key(&(kind, key)) {
                    return Err(CatalogError::Missing { kind, key });
                }
            }
        }

        Ok(Self {
            version: doc.version,
            language: doc.language,
            category_statement,
            category_not_assessed,
            plan_preamble,
            age_bands: doc.age_bands,
            ranks: doc.ranks,
            items,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, CatalogError> {
        load_catalog(&std::fs::read_to_string(path)?)
    }

    /// The English catalog compiled into the crate.
    pub fn shipped() -> Self {
        load_catalog(SHIPPED_CATALOG).expect("shipped catalog is valid")
    }

    pub fn shipped_json() -> &'static str {
        SHIPPED_CATALOG
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn ranks(&self) -> &PureRankTable {
        &self.ranks
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn item(&self, kind: ItemKind, key: u8) -> Option<&ContentItem> {
        self.items.get(&(kind, key))
    }

    pub fn items(&self) -> impl Iterator<Item = &ContentItem> {
        self.items.values()
    }

    pub fn render_item(
        &self,
        item: &ContentItem,
        ctx: &RenderContext<'_>,
    ) -> Result<String, RenderError> {
        item.template.render(ctx, &self.age_bands)
    }

    pub fn render(
        &self,
        kind: ItemKind,
        key: u8,
        ctx: &RenderContext<'_>,
    ) -> Result<String, RenderError> {
        let item = self
            .item(kind, key)
            .ok_or(RenderError::MissingItem { kind, key })?;
        self.render_item(item, ctx)
    }

    /// Opening sentence of the information section.
    pub fn render_category(&self, ctx: &RenderContext<'_>) -> Result<String, RenderError> {
        let t = if ctx.risk.category == RiskCategory::NotAssessed {
            &self.category_not_assessed
        } else {
            &self.category_statement
        };
        t.render(ctx, &self.age_bands)
    }

    pub fn render_plan_preamble(&self, ctx: &RenderContext<'_>) -> Result<String, RenderError> {
        self.plan_preamble.render(ctx, &self.age_bands)
    }

    pub fn to_document(&self) -> CatalogDocument {
        CatalogDocument {
            version: self.version.clone(),
            language: self.language.clone(),
            category_statement: self.category_statement.source.clone(),
            category_not_assessed: self.category_not_assessed.source.clone(),
            plan_preamble: self.plan_preamble.source.clone(),
            age_bands: self.age_bands.clone(),
            ranks: self.ranks.clone(),
            items: self
                .items
                .values()
                .map(|i| ItemDocument {
                    kind: i.kind,
                    key: i.key,
                    text: i.template.source.clone(),
                    lang: (i.lang != self.language).then(|| i.lang.clone()),
                })
                .collect(),
        }
    }
}

/// Renders one item against a context.
pub fn render_item(
    catalog: &Catalog,
    item: &ContentItem,
    ctx: &RenderContext<'_>,
) -> Result<String, RenderError> {
    catalog.render_item(item, ctx)
}
