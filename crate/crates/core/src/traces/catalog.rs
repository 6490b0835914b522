//! Attack-variant catalog: per attack, the session skeletons in which the
//! undesired behavior occurs, plus benign session pools per layer.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::format::parse_traces;
use super::model::{CorpusAlphabet, Layer, Session, DEFAULT_INITIATION_LABELS};
use super::TraceError;
use crate::pltl::{parse_formula, Alphabet, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub name: String,
    pub layer: Layer,
    pub variants: Vec<Session>,
    /// Hand-written PLTL signature that every variant violates.
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantCatalog {
    attacks: BTreeMap<String, AttackSpec>,
    benign: BTreeMap<Layer, Vec<Session>>,
}

const RRC_OPEN: &str = "rrcConnectionRequest rrcConnectionSetup rrcConnectionSetupComplete";
const RRC_SEC: &str = "securityModeCommand securityModeComplete";
const NAS_AUTH: &str = "authenticationRequest authenticationResponse";
const NAS_SEC: &str = "nasSecurityModeCommand nasSecurityModeComplete";

const RRC_SECURED: &str = "(S (not (prop rrcConnectionRequest)) (prop securityModeComplete))";
const NAS_SECURED: &str = "(S (not (or (or (prop attachRequest) (prop serviceRequest)) (prop tauRequest))) (prop nasSecurityModeComplete))";

fn expand(template: &str) -> String {
    template
        .replace("OPEN", RRC_OPEN)
        .replace("RSEC", RRC_SEC)
        .replace("AUTH", NAS_AUTH)
        .replace("NSEC", NAS_SEC)
}

fn sessions(templates: &[&str]) -> Vec<Session> {
    templates
        .iter()
        .map(|t| Session::from_symbols(&expand(t)).expect("builtin session"))
        .collect()
}

const RRC_BENIGN: &[&str] = &[
    "OPEN RSEC rrcConnectionReconfiguration+drb rrcConnectionReconfigurationComplete rrcConnectionRelease",
    "OPEN RSEC ueCapabilityEnquiry ueCapabilityInformation rrcConnectionReconfiguration+drb rrcConnectionReconfigurationComplete rrcConnectionRelease",
    "OPEN RSEC ueInformationRequest rlfReport rrcConnectionRelease",
    "OPEN RSEC rrcConnectionReconfiguration+measConfig rrcConnectionReconfigurationComplete measurementReport rrcConnectionRelease",
    "OPEN ueCapabilityEnquiry ueCapabilityInformation RSEC rrcConnectionReconfiguration+drb rrcConnectionReconfigurationComplete rrcConnectionRelease paging",
    "OPEN RSEC rrcConnectionReconfiguration+drb+measConfig rrcConnectionReconfigurationComplete measurementReport ueInformationRequest rlfReport rrcConnectionRelease",
    "OPEN rrcConnectionRelease paging",
    "OPEN identityRequest identityResponse RSEC rrcConnectionReconfiguration+drb rrcConnectionReconfigurationComplete rrcConnectionRelease",
    "OPEN RSEC rrcConnectionRelease paging",
    "OPEN RSEC ueCapabilityEnquiry ueCapabilityInformation ueInformationRequest rlfReport rrcConnectionReconfiguration+measConfig rrcConnectionReconfigurationComplete measurementReport rrcConnectionRelease",
];

const NAS_BENIGN: &[&str] = &[
    "attachRequest AUTH NSEC attachAccept attachComplete",
    "attachRequest AUTH NSEC identityRequest+imei identityResponse attachAccept attachComplete",
    "serviceRequest AUTH NSEC serviceAccept",
    "tauRequest NSEC tauAccept tauComplete",
    "attachRequest AUTH NSEC attachAccept attachComplete emmInformation",
    "attachRequest authenticationRequest authenticationFailure AUTH NSEC attachAccept attachComplete",
    "attachRequest AUTH NSEC attachAccept attachComplete detachRequest detachAccept",
    "tauRequest AUTH NSEC tauAccept tauComplete emmInformation",
    "serviceRequest NSEC serviceReject",
    "attachRequest AUTH NSEC attachReject",
    "tauRequest NSEC tauReject",
];

struct Builtin {
    name: &'static str,
    layer: Layer,
    variants: &'static [&'static str],
    reference: &'static str,
}

const BUILTIN: &[Builtin] = &[
    Builtin {
        name: "rlf_report",
        layer: Layer::Rrc,
        variants: &[
            "OPEN ueInformationRequest rlfReport",
            "OPEN identityRequest identityResponse ueInformationRequest rlfReport",
            "OPEN ueCapabilityEnquiry ueCapabilityInformation ueInformationRequest rlfReport",
            "OPEN identityRequest identityResponse ueCapabilityEnquiry ueCapabilityInformation ueInformationRequest rlfReport",
        ],
        reference: "(imp (prop ueInformationRequest) RRC_SECURED)",
    },
    Builtin {
        name: "measurement_report",
        layer: Layer::Rrc,
        variants: &[
            "OPEN rrcConnectionReconfiguration+measConfig rrcConnectionReconfigurationComplete measurementReport",
            "OPEN identityRequest identityResponse rrcConnectionReconfiguration+measConfig rrcConnectionReconfigurationComplete measurementReport",
            "OPEN ueCapabilityEnquiry ueCapabilityInformation rrcConnectionReconfiguration+measConfig rrcConnectionReconfigurationComplete measurementReport",
        ],
        reference: "(imp (and (prop rrcConnectionReconfiguration) (prop measConfig)) RRC_SECURED)",
    },
    Builtin {
        name: "aka_bypass",
        layer: Layer::Rrc,
        variants: &[
            "OPEN rrcConnectionReconfiguration+drb rrcConnectionReconfigurationComplete",
            "OPEN ueCapabilityEnquiry ueCapabilityInformation rrcConnectionReconfiguration+drb rrcConnectionReconfigurationComplete",
            "OPEN identityRequest identityResponse rrcConnectionReconfiguration+drb rrcConnectionReconfigurationComplete",
        ],
        reference: "(imp (and (prop rrcConnectionReconfiguration) (prop drb)) RRC_SECURED)",
    },
    Builtin {
        name: "paging_imsi",
        layer: Layer::Rrc,
        variants: &[
            "OPEN rrcConnectionRelease paging+imsi",
            "OPEN RSEC rrcConnectionRelease paging+imsi",
        ],
        reference: "(not (and (prop paging) (prop imsi)))",
    },
    Builtin {
        name: "imsi_cracking",
        layer: Layer::Rrc,
        variants: &[
            "OPEN rrcConnectionRelease paging+crafted+imsi",
            "OPEN RSEC rrcConnectionRelease paging+crafted+imsi",
        ],
        reference: "(not (and (prop paging) (prop crafted)))",
    },
    Builtin {
        name: "imsi_catching",
        layer: Layer::Nas,
        variants: &[
            "attachRequest identityRequest+imsi identityResponse",
            "serviceRequest identityRequest+imsi identityResponse",
        ],
        reference: "(imp (and (prop identityRequest) (prop imsi)) NAS_SECURED)",
    },
    Builtin {
        name: "imei_catching",
        layer: Layer::Nas,
        variants: &[
            "attachRequest identityRequest+imei identityResponse",
            "tauRequest identityRequest+imei identityResponse",
        ],
        reference: "(imp (and (prop identityRequest) (prop imei)) NAS_SECURED)",
    },
    Builtin {
        name: "malformed_identity_request",
        layer: Layer::Nas,
        variants: &[
            "attachRequest identityRequest+malformed identityResponse",
            "serviceRequest identityRequest+malformed",
        ],
        reference: "(not (and (prop identityRequest) (prop malformed)))",
    },
    Builtin {
        name: "null_encryption",
        layer: Layer::Nas,
        variants: &[
            "attachRequest AUTH nasSecurityModeCommand+nullCipher nasSecurityModeComplete attachAccept attachComplete",
            "serviceRequest AUTH nasSecurityModeCommand+nullCipher nasSecurityModeComplete serviceAccept",
            "tauRequest nasSecurityModeCommand+nullCipher nasSecurityModeComplete tauAccept tauComplete",
        ],
        reference: "(not (and (prop nasSecurityModeCommand) (prop nullCipher)))",
    },
    Builtin {
        name: "emm_information",
        layer: Layer::Nas,
        variants: &[
            "attachRequest emmInformation",
            "serviceRequest emmInformation",
            "tauRequest emmInformation",
            "attachRequest AUTH emmInformation",
        ],
        reference: "(imp (prop emmInformation) NAS_SECURED)",
    },
    Builtin {
        name: "numb",
        layer: Layer::Nas,
        variants: &[
            "attachRequest authenticationReject",
            "attachRequest AUTH authenticationReject",
        ],
        reference: "(imp (prop authenticationReject) NAS_SECURED)",
    },
    Builtin {
        name: "attach_reject",
        layer: Layer::Nas,
        variants: &[
            "attachRequest attachReject",
            "attachRequest AUTH attachReject",
            "attachRequest identityRequest identityResponse attachReject",
            "attachRequest authenticationRequest authenticationFailure attachReject",
        ],
        reference: "(imp (prop attachReject) NAS_SECURED)",
    },
    Builtin {
        name: "tau_reject",
        layer: Layer::Nas,
        variants: &["tauRequest tauReject", "tauRequest AUTH tauReject"],
        reference: "(imp (prop tauReject) NAS_SECURED)",
    },
    Builtin {
        name: "service_reject",
        layer: Layer::Nas,
        variants: &["serviceRequest serviceReject", "serviceRequest AUTH serviceReject"],
        reference: "(imp (prop serviceReject) NAS_SECURED)",
    },
];

impl VariantCatalog {
    /// Catalog with no attacks and no benign sessions.
    pub fn empty() -> Self {
        VariantCatalog {
            attacks: BTreeMap::new(),
            benign: BTreeMap::new(),
        }
    }

    /// The shipped attacks and benign pools.
    pub fn builtin() -> Self {
        let mut c = VariantCatalog::empty();
        c.benign.insert(Layer::Rrc, sessions(RRC_BENIGN));
        c.benign.insert(Layer::Nas, sessions(NAS_BENIGN));
        for b in BUILTIN {
            let reference = b
                .reference
                .replace("RRC_SECURED", RRC_SECURED)
                .replace("NAS_SECURED", NAS_SECURED);
            c.attacks.insert(
                b.name.to_string(),
                AttackSpec {
                    name: b.name.to_string(),
                    layer: b.layer,
                    variants: sessions(b.variants),
                    reference: Some(reference),
                },
            );
        }
        c
    }

    pub fn attack(&self, name: &str) -> Result<&AttackSpec, TraceError> {
        self.attacks
            .get(name)
            .ok_or_else(|| TraceError::UnknownAttack(name.to_string()))
    }

    pub fn attacks(&self) -> impl Iterator<Item = &AttackSpec> + '_ {
        self.attacks.values()
    }

    pub fn names(&self) -> Vec<&str> {
        self.attacks.keys().map(String::as_str).collect()
    }

    pub fn benign_pool(&self, layer: Layer) -> &[Session] {
        self.benign.get(&layer).map_or(&[], Vec::as_slice)
    }

    pub fn set_benign_pool(&mut self, layer: Layer, pool: Vec<Session>) {
        self.benign.insert(layer, pool);
    }

    /// Adds variants to an attack, creating it if needed. With `replace`
    /// the previous variants are dropped. Duplicates are kept once.
    pub fn add_variants(
        &mut self,
        name: &str,
        layer: Option<Layer>,
        variants: Vec<Session>,
        replace: bool,
    ) -> Result<(), TraceError> {
        for v in &variants {
            if !v.starts_with_initiation(&DEFAULT_INITIATION_LABELS) {
                return Err(TraceError::MalformedSkeleton {
                    attack: name.to_string(),
                    message: "variant must start with a connection-initiation message".into(),
                });
            }
        }
        let layer = layer.unwrap_or_else(|| infer_layer(&variants));
        let entry = self.attacks.entry(name.to_string()).or_insert_with(|| AttackSpec {
            name: name.to_string(),
            layer,
            variants: Vec::new(),
            reference: None,
        });
        if replace {
            entry.variants.clear();
        }
        for v in variants {
            if !entry.variants.contains(&v) {
                entry.variants.push(v);
            }
        }
        Ok(())
    }

    /// Every label and predicate used by the pools and variants.
    pub fn corpus_alphabet(&self) -> CorpusAlphabet {
        let mut a = CorpusAlphabet::default();
        for pool in self.benign.values() {
            for s in pool {
                a.extend_with(&s.events);
            }
        }
        for spec in self.attacks.values() {
            for s in &spec.variants {
                a.extend_with(&s.events);
            }
        }
        a
    }

    /// Reference signature of an attack parsed over `alphabet`.
    pub fn reference_formula(
        &self,
        name: &str,
        alphabet: &Alphabet,
    ) -> Result<Option<Formula>, TraceError> {
        match &self.attack(name)?.reference {
            Some(text) => Ok(Some(parse_formula(text, alphabet)?)),
            None => Ok(None),
        }
    }
}

fn infer_layer(variants: &[Session]) -> Layer {
    match variants.first().and_then(|s| s.events.first()) {
        Some(e) if e.label == "rrcConnectionRequest" => Layer::Rrc,
        _ => Layer::Nas,
    }
}

/// Built-in catalog extended by the `*.trc` files in `dir`. Each file is
/// named after its attack and every session in it is one variant;
/// `<attack>.override.trc` replaces the built-in variants instead of adding
/// to them. An optional `@layer NAS|RRC` line sets the layer of a new attack.
pub fn load_catalog(dir: &Path) -> Result<VariantCatalog, TraceError> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| TraceError::io(dir, e))? {
        let path = entry.map_err(|e| TraceError::io(dir, e))?.path();
        if path.extension().is_none_or(|x| x != "trc") {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| TraceError::io(&path, e))?;
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
        files.insert(name.to_string(), text);
    }
    catalog_from_files(&files)
}

/// [`load_catalog`] over file names and contents already in memory.
pub fn catalog_from_files(files: &BTreeMap<String, String>) -> Result<VariantCatalog, TraceError> {
    let mut catalog = VariantCatalog::builtin();
    for (file, text) in files {
        let stem = file.strip_suffix(".trc").unwrap_or(file);
        let (name, replace) = match stem.strip_suffix(".override") {
            Some(n) => (n, true),
            None => (stem, false),
        };
        add_catalog_file(&mut catalog, name, text, replace)?;
    }
    Ok(catalog)
}

/// Merges one catalog file's text; see [`load_catalog`].
pub fn add_catalog_file(
    catalog: &mut VariantCatalog,
    name: &str,
    text: &str,
    replace: bool,
) -> Result<(), TraceError> {
    let mut layer = None;
    let mut body = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.trim().strip_prefix("@layer") {
            let l = rest.trim().parse().map_err(|m| TraceError::Parse {
                line: i + 1,
                message: m,
            })?;
            layer = Some(l);
            body.push_str("#\n");
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let parsed = parse_traces(&body).map_err(|e| TraceError::MalformedSkeleton {
        attack: name.to_string(),
        message: e.to_string(),
    })?;
    let variants: Vec<Session> = parsed.traces.into_iter().flat_map(|t| t.sessions).collect();
    catalog.add_variants(name, layer, variants, replace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pltl::holds_globally;
    use crate::traces::TraceSkeleton;

    #[test]
    fn builtin_shape() {
        let c = VariantCatalog::builtin();
        assert_eq!(c.names().len(), 14);
        assert_eq!(c.attack("rlf_report").unwrap().variants.len(), 4);
        assert!(c.attack("nope").is_err());
        for spec in c.attacks() {
            for (i, v) in spec.variants.iter().enumerate() {
                assert!(v.starts_with_initiation(&DEFAULT_INITIATION_LABELS));
                assert!(!spec.variants[..i].contains(v), "{} repeats a variant", spec.name);
            }
        }
    }

    #[test]
    fn references_split_pools_from_variants() {
        let c = VariantCatalog::builtin();
        let alphabet = c.corpus_alphabet().alphabet().unwrap();
        for spec in c.attacks() {
            let f = c.reference_formula(&spec.name, &alphabet).unwrap().unwrap();
            for s in c.benign_pool(spec.layer) {
                let t = TraceSkeleton::new(vec![s.clone()]).to_trace(&alphabet).unwrap();
                assert!(holds_globally(&f, &t).unwrap(), "{} flags benign {s:?}", spec.name);
            }
            for s in &spec.variants {
                let t = TraceSkeleton::new(vec![s.clone()]).to_trace(&alphabet).unwrap();
                assert!(!holds_globally(&f, &t).unwrap(), "{} misses {s:?}", spec.name);
            }
        }
    }

    #[test]
    fn user_files_extend_or_replace() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(load_catalog(dir.path()).unwrap(), VariantCatalog::builtin());

        std::fs::write(
            dir.path().join("rlf_report.trc"),
            "rrcConnectionRequest\nrrcConnectionSetup\nueInformationRequest\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("numb.override.trc"), "@layer NAS\nattachRequest\nauthenticationReject\n")
            .unwrap();
        std::fs::write(dir.path().join("fresh.trc"), "@layer RRC\nrrcConnectionRequest\nfoo\n").unwrap();
        let c = load_catalog(dir.path()).unwrap();
        assert_eq!(c.attack("rlf_report").unwrap().variants.len(), 5);
        assert_eq!(c.attack("numb").unwrap().variants.len(), 1);
        assert_eq!(c.attack("fresh").unwrap().layer, Layer::Rrc);
        assert_eq!(c.attack("fresh").unwrap().reference, None);

        std::fs::write(dir.path().join("bad.trc"), "attachAccept\n").unwrap();
        assert!(matches!(
            load_catalog(dir.path()),
            Err(TraceError::MalformedSkeleton { .. })
        ));
    }
}
