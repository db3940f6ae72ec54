//! Shared-patient and provider files to a per-state provider network.
//!
//! Configuration is a TOML file of `key = value` pairs:
//!
//! ```toml
//! threshold = 1                  # minimum shared count kept
//! include_isolates = false       # keep in-state providers without edges
//! interval = "30-day"            # label only, copied to the summary
//! default_type = "specialty"     # type of specialties not listed below
//! primary_specialties = ["Family Practice", "Internal Medicine"]
//! specialty_specialties = []     # listed specialties are not warned about
//!
//! [shared]
//! delimiter = ","
//! has_header = true              # false: columns below are 0-based indices
//! npi_a = "npi_a"
//! npi_b = "npi_b"
//! count = "shared_count"
//!
//! [providers]
//! delimiter = ","
//! has_header = true
//! npi = "npi"
//! state = "state"
//! specialty = "specialty"
//! ```
//!
//! Every key is optional; the values above are the defaults except for
//! `primary_specialties`, which defaults to [`DEFAULT_PRIMARY_SPECIALTIES`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use ccm_core::{Graph, NodeType};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_PRIMARY_SPECIALTIES: [&str; 5] =
    ["Family Practice", "Internal Medicine", "General Practice", "Geriatric Medicine", "Pediatric Medicine"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefaultType {
    Primary,
    Specialty,
}

impl From<DefaultType> for NodeType {
    fn from(t: DefaultType) -> Self {
        match t {
            DefaultType::Primary => NodeType::Primary,
            DefaultType::Specialty => NodeType::Specialty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharedFormat {
    pub delimiter: String,
    pub has_header: bool,
    pub npi_a: String,
    pub npi_b: String,
    pub count: String,
}

impl Default for SharedFormat {
    fn default() -> Self {
        Self {
            delimiter: ",".into(),
            has_header: true,
            npi_a: "npi_a".into(),
            npi_b: "npi_b".into(),
            count: "shared_count".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderFormat {
    pub delimiter: String,
    pub has_header: bool,
    pub npi: String,
    pub state: String,
    pub specialty: String,
}

impl Default for ProviderFormat {
    fn default() -> Self {
        Self {
            delimiter: ",".into(),
            has_header: true,
            npi: "npi".into(),
            state: "state".into(),
            specialty: "specialty".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub threshold: u64,
    pub include_isolates: bool,
    pub interval: Option<String>,
    pub default_type: DefaultType,
    pub primary_specialties: Vec<String>,
    pub specialty_specialties: Vec<String>,
    pub shared: SharedFormat,
    pub providers: ProviderFormat,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            threshold: 1,
            include_isolates: false,
            interval: None,
            default_type: DefaultType::Specialty,
            primary_specialties: DEFAULT_PRIMARY_SPECIALTIES.iter().map(|s| s.to_string()).collect(),
            specialty_specialties: Vec::new(),
            shared: SharedFormat::default(),
            providers: ProviderFormat::default(),
        }
    }
}

impl IngestConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(format!("ingest config: {e}")))?;
        if cfg.threshold == 0 {
            return Err(CliError::Config("ingest config: threshold must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn mapping(&self) -> SpecialtyMapping {
        SpecialtyMapping::new(&self.primary_specialties, &self.specialty_specialties, self.default_type.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SharedPatientRecord {
    pub npi_a: String,
    pub npi_b: String,
    pub shared_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProviderRecord {
    pub npi: String,
    pub state: String,
    pub specialty: String,
    pub derived_type: NodeType,
}

/// Specialty strings to provider types, matched case-insensitively after
/// trimming.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialtyMapping {
    table: BTreeMap<String, NodeType>,
    default: NodeType,
}

fn specialty_key(s: &str) -> String {
    s.trim().to_lowercase()
}

impl SpecialtyMapping {
    pub fn new(primary: &[String], specialty: &[String], default: NodeType) -> Self {
        let mut table = BTreeMap::new();
        for s in specialty {
            table.insert(specialty_key(s), NodeType::Specialty);
        }
        for s in primary {
            table.insert(specialty_key(s), NodeType::Primary);
        }
        Self { table, default }
    }

    /// The mapped type, or `None` when the default applies.
    pub fn lookup(&self, specialty: &str) -> Option<NodeType> {
        self.table.get(&specialty_key(specialty)).copied()
    }

    pub fn default_type(&self) -> NodeType {
        self.default
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SharedParse {
    /// Unordered pairs with `npi_a < npi_b`, sorted.
    pub records: Vec<SharedPatientRecord>,
    pub rows: u64,
    pub below_threshold: u64,
    pub self_pairs: u64,
    /// Rows that repeated an already seen pair (either orientation).
    pub merged_duplicates: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProviderParse {
    pub records: Vec<ProviderRecord>,
    pub rows: u64,
    /// Specialty strings that fell back to the default type, with counts.
    pub unmapped_specialties: BTreeMap<String, u64>,
    /// Later rows for an NPI already seen; the first row wins.
    pub duplicate_npis: u64,
}

impl ProviderParse {
    pub fn unmapped_count(&self) -> u64 {
        self.unmapped_specialties.values().sum()
    }
}

fn delimiter_byte(spec: &str, path: &Path) -> Result<u8> {
    match spec {
        "\\t" | "tab" => Ok(b'\t'),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        s => Err(CliError::Config(format!("{}: delimiter {s:?} must be one ASCII character", path.display()))),
    }
}

/// Column positions for the named columns.
fn locate(
    reader: &mut csv::Reader<impl Read>,
    has_header: bool,
    names: &[&str],
    path: &Path,
) -> Result<Vec<usize>> {
    if !has_header {
        return names
            .iter()
            .map(|n| {
                n.parse::<usize>().map_err(|_| CliError::Config(format!(
                    "{}: without a header, column {n:?} must be a 0-based index",
                    path.display()
                )))
            })
            .collect();
    }
    let header = reader.headers().map_err(|e| csv_error(e, path))?.clone();
    names
        .iter()
        .map(|n| {
            header.iter().position(|h| h.trim() == *n).ok_or_else(|| CliError::Schema {
                path: path.to_path_buf(),
                message: format!("missing column {n:?}"),
            })
        })
        .collect()
}

fn csv_error(e: csv::Error, path: &Path) -> CliError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(err) => CliError::io(path, err),
        kind => CliError::Parse { path: path.to_path_buf(), line, message: format!("{kind:?}") },
    }
}

fn csv_reader<R: Read>(input: R, delimiter: u8, has_header: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Streams a shared-patient file. Errors name the physical line (the header,
/// when present, is line 1).
pub fn parse_shared_patient<R: Read>(input: R, path: &Path, format: &SharedFormat, threshold: u64) -> Result<SharedParse> {
    let delim = delimiter_byte(&format.delimiter, path)?;
    let mut reader = csv_reader(input, delim, format.has_header);
    let cols = locate(&mut reader, format.has_header, &[&format.npi_a, &format.npi_b, &format.count], path)?;
    let mut best: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut out = SharedParse::default();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(e, path)),
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        out.rows += 1;
        let malformed = |message: String| CliError::Parse { path: path.to_path_buf(), line, message };
        let field = |i: usize, name: &str| -> Result<String> {
            match record.get(cols[i]) {
                Some(v) if !v.is_empty() => Ok(v.to_string()),
                _ => Err(malformed(format!("missing value for column {name:?}"))),
            }
        };
        let a = field(0, &format.npi_a)?;
        let b = field(1, &format.npi_b)?;
        let raw = field(2, &format.count)?;
        let count: u64 = raw.parse().map_err(|_| malformed(format!("shared count {raw:?} is not a positive integer")))?;
        if count == 0 {
            return Err(malformed("shared count must be at least 1".into()));
        }
        if a == b {
            out.self_pairs += 1;
            continue;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        match best.get_mut(&key) {
            Some(c) => {
                out.merged_duplicates += 1;
                *c = (*c).max(count);
            }
            None => {
                best.insert(key, count);
            }
        }
    }
    for ((npi_a, npi_b), shared_count) in best {
        if shared_count >= threshold {
            out.records.push(SharedPatientRecord { npi_a, npi_b, shared_count });
        } else {
            out.below_threshold += 1;
        }
    }
    Ok(out)
}

pub fn parse_providers<R: Read>(
    input: R,
    path: &Path,
    format: &ProviderFormat,
    mapping: &SpecialtyMapping,
) -> Result<ProviderParse> {
    let delim = delimiter_byte(&format.delimiter, path)?;
    let mut reader = csv_reader(input, delim, format.has_header);
    let cols = locate(&mut reader, format.has_header, &[&format.npi, &format.state, &format.specialty], path)?;
    let mut seen = BTreeSet::new();
    let mut out = ProviderParse::default();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(e, path)),
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        out.rows += 1;
        let required = |i: usize, what: &str| -> Result<String> {
            match record.get(cols[i]) {
                Some(v) if !v.is_empty() => Ok(v.to_string()),
                _ => Err(CliError::Schema { path: path.to_path_buf(), message: format!("line {line}: missing {what}") }),
            }
        };
        let npi = required(0, "NPI")?;
        let state = required(1, "state")?.to_uppercase();
        let specialty = record.get(cols[2]).unwrap_or("").to_string();
        if !seen.insert(npi.clone()) {
            out.duplicate_npis += 1;
            continue;
        }
        let derived_type = match mapping.lookup(&specialty) {
            Some(t) => t,
            None => {
                *out.unmapped_specialties.entry(specialty.clone()).or_default() += 1;
                mapping.default_type()
            }
        };
        out.records.push(ProviderRecord { npi, state, specialty, derived_type });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BuildSummary {
    pub state: String,
    pub nodes: usize,
    pub edges: usize,
    pub primary: usize,
    pub specialty: usize,
    /// Pairs with exactly one endpoint in the state.
    pub cross_state_pairs: u64,
    /// Pairs with an endpoint missing from the provider file.
    pub unknown_provider_pairs: u64,
    pub isolates_included: usize,
}

/// The in-state network. Nodes are ordered by NPI, so the graph does not
/// depend on input row order.
pub fn build_state_graph(
    shared: &[SharedPatientRecord],
    providers: &[ProviderRecord],
    state: &str,
    include_isolates: bool,
) -> Result<(Graph, BuildSummary)> {
    let state = state.trim().to_uppercase();
    let by_npi: BTreeMap<&str, &ProviderRecord> = providers.iter().map(|p| (p.npi.as_str(), p)).collect();
    let mut summary = BuildSummary { state: state.clone(), ..Default::default() };
    let mut pairs = BTreeSet::new();
    let mut members: BTreeSet<&str> = BTreeSet::new();
    for r in shared {
        let (a, b) = match (by_npi.get(r.npi_a.as_str()), by_npi.get(r.npi_b.as_str())) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                summary.unknown_provider_pairs += 1;
                continue;
            }
        };
        match (a.state == state, b.state == state) {
            (true, true) => {
                members.insert(&a.npi);
                members.insert(&b.npi);
                let key = if a.npi < b.npi { (&a.npi, &b.npi) } else { (&b.npi, &a.npi) };
                pairs.insert(key);
            }
            (false, false) => {}
            _ => summary.cross_state_pairs += 1,
        }
    }
    if include_isolates {
        for p in providers.iter().filter(|p| p.state == state) {
            if members.insert(&p.npi) {
                summary.isolates_included += 1;
            }
        }
    }
    if members.is_empty() {
        return Err(CliError::EmptyNetwork { state });
    }
    let index: BTreeMap<&str, usize> = members.iter().enumerate().map(|(i, &npi)| (npi, i)).collect();
    let ids: Vec<String> = members.iter().map(|s| s.to_string()).collect();
    let types: Vec<NodeType> = members.iter().map(|npi| by_npi[npi].derived_type).collect();
    let edges = pairs.iter().map(|(a, b)| (index[a.as_str()], index[b.as_str()]));
    let g = Graph::new(ids, types, edges)?;
    let (p, s, _) = g.type_counts();
    summary.nodes = g.node_count();
    summary.edges = g.edge_count();
    summary.primary = p;
    summary.specialty = s;
    Ok((g, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    #[serde(flatten)]
    pub graph: BuildSummary,
    pub threshold: u64,
    pub interval: Option<String>,
    pub shared_rows: u64,
    pub shared_pairs_kept: usize,
    pub shared_below_threshold: u64,
    pub shared_self_pairs: u64,
    pub shared_merged_duplicates: u64,
    pub provider_rows: u64,
    pub provider_duplicate_npis: u64,
    pub unmapped_specialty_count: u64,
    pub unmapped_specialties: BTreeMap<String, u64>,
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::io(path, e))
}

pub struct IngestInputs<'a> {
    pub shared: &'a Path,
    pub providers: &'a Path,
    pub state: &'a str,
}

/// Parses both files and builds the state network.
pub fn ingest(inputs: &IngestInputs<'_>, cfg: &IngestConfig) -> Result<(Graph, IngestSummary)> {
    let shared = parse_shared_patient(open(inputs.shared)?, inputs.shared, &cfg.shared, cfg.threshold)?;
    let providers = parse_providers(open(inputs.providers)?, inputs.providers, &cfg.providers, &cfg.mapping())?;
    let (g, graph) = build_state_graph(&shared.records, &providers.records, inputs.state, cfg.include_isolates)?;
    let summary = IngestSummary {
        graph,
        threshold: cfg.threshold,
        interval: cfg.interval.clone(),
        shared_rows: shared.rows,
        shared_pairs_kept: shared.records.len(),
        shared_below_threshold: shared.below_threshold,
        shared_self_pairs: shared.self_pairs,
        shared_merged_duplicates: shared.merged_duplicates,
        provider_rows: providers.rows,
        provider_duplicate_npis: providers.duplicate_npis,
        unmapped_specialty_count: providers.unmapped_count(),
        unmapped_specialties: providers.unmapped_specialties,
    };
    Ok((g, summary))
}

/// Resolves a config path, or the defaults.
pub fn load_config(path: Option<&PathBuf>) -> Result<(IngestConfig, Option<Vec<u8>>)> {
    match path {
        None => Ok((IngestConfig::default(), None)),
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| CliError::Config(format!("{}: not UTF-8", p.display())))?;
            Ok((IngestConfig::parse(&text)?, Some(bytes)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shared(text: &str, threshold: u64) -> Result<SharedParse> {
        parse_shared_patient(text.as_bytes(), Path::new("shared.csv"), &SharedFormat::default(), threshold)
    }

    fn provider(npi: &str, state: &str, t: NodeType) -> ProviderRecord {
        ProviderRecord { npi: npi.into(), state: state.into(), specialty: String::new(), derived_type: t }
    }

    #[test]
    fn symmetric_rows_collapse() {
        let p = shared("npi_a,npi_b,shared_count\nA,B,3\nB,A,3\n", 1).unwrap();
        assert_eq!(p.records, vec![SharedPatientRecord { npi_a: "A".into(), npi_b: "B".into(), shared_count: 3 }]);
        assert_eq!(p.merged_duplicates, 1);
    }

    #[test]
    fn duplicates_keep_the_largest_count() {
        let p = shared("npi_a,npi_b,shared_count\nA,B,1\nB,A,5\n", 2).unwrap();
        assert_eq!(p.records[0].shared_count, 5);
    }

    #[test]
    fn threshold_filter() {
        let p = shared("npi_a,npi_b,shared_count\nA,B,1\nA,C,2\n", 2).unwrap();
        assert_eq!(p.records, vec![SharedPatientRecord { npi_a: "A".into(), npi_b: "C".into(), shared_count: 2 }]);
        assert_eq!(p.below_threshold, 1);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let err = shared("npi_a,npi_b,shared_count\nA,B,1\nA,C,x\nB,C,2\n", 1).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err:?}");
        let err = shared("npi_a,npi_b,shared_count\nA,B,1\nA,C\n", 1).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err:?}");
        let err = shared("npi_a,npi_b,shared_count\nA,B,0\n", 1).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let err = shared("npi_a,other,shared_count\nA,B,1\n", 1).unwrap_err();
        assert!(matches!(err, CliError::Schema { .. }));
    }

    #[test]
    fn headerless_columns_by_index() {
        let format = SharedFormat {
            has_header: false,
            npi_a: "0".into(),
            npi_b: "1".into(),
            count: "3".into(),
            delimiter: "tab".into(),
        };
        let p = parse_shared_patient("A\tB\t99\t4\n".as_bytes(), Path::new("s"), &format, 1).unwrap();
        assert_eq!(p.records[0].shared_count, 4);
    }

    #[test]
    fn provider_typing() {
        let cfg = IngestConfig { primary_specialties: vec!["Family Practice".into()], ..Default::default() };
        let text = "npi,state,specialty\n1,WY,Family Practice\n2,wy,Podiatry\n3,WY, family practice \n";
        let p = parse_providers(text.as_bytes(), Path::new("p"), &cfg.providers, &cfg.mapping()).unwrap();
        let types: Vec<_> = p.records.iter().map(|r| r.derived_type).collect();
        assert_eq!(types, [NodeType::Primary, NodeType::Specialty, NodeType::Primary]);
        assert_eq!(p.unmapped_count(), 1);
        assert_eq!(p.unmapped_specialties["Podiatry"], 1);
        assert_eq!(p.records[1].state, "WY");
    }

    #[test]
    fn provider_without_state_is_a_schema_error() {
        let cfg = IngestConfig::default();
        let text = "npi,state,specialty\n1,,Family Practice\n";
        let err = parse_providers(text.as_bytes(), Path::new("p"), &cfg.providers, &cfg.mapping()).unwrap_err();
        assert!(matches!(err, CliError::Schema { .. }));
    }

    #[test]
    fn state_graph_rules() {
        let providers = [
            provider("a", "WY", NodeType::Primary),
            provider("b", "WY", NodeType::Specialty),
            provider("c", "CO", NodeType::Primary),
            provider("d", "WY", NodeType::Primary),
        ];
        let rec = |a: &str, b: &str| SharedPatientRecord { npi_a: a.into(), npi_b: b.into(), shared_count: 1 };
        let (g, s) = build_state_graph(&[rec("a", "b"), rec("a", "c")], &providers, "WY", false).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(s.cross_state_pairs, 1);
        assert_eq!(g.node_ids(), ["a", "b"]);
        let (g, s) = build_state_graph(&[rec("a", "b")], &providers, "wy", true).unwrap();
        assert_eq!((g.node_count(), s.isolates_included), (3, 1));
        let err = build_state_graph(&[rec("a", "c")], &providers, "WY", false).unwrap_err();
        assert!(matches!(err, CliError::EmptyNetwork { .. }));
    }

    #[test]
    fn config_round_trip() {
        let cfg = IngestConfig::parse("threshold = 11\n[shared]\ncount = \"pair_count\"\n").unwrap();
        assert_eq!(cfg.threshold, 11);
        assert_eq!(cfg.shared.count, "pair_count");
        assert_eq!(cfg.providers, ProviderFormat::default());
        assert!(IngestConfig::parse("thresold = 1\n").is_err());
        assert!(IngestConfig::parse("threshold = 0\n").is_err());
    }
}
