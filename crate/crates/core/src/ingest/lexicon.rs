use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// The category added on top of the UniProt scheme.
pub const CLINICAL_TRIAL: &str = "Clinical trial";

const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.json");

/// Category name → descriptor phrases (category names and qualifiers).
///
/// Phrases are stored lowercase. For [`CLINICAL_TRIAL`] the phrases are the
/// query keywords that mark a clinical-trial topic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryLexicon {
    categories: BTreeMap<String, BTreeSet<String>>,
    by_phrase: HashMap<String, Vec<String>>,
}

impl CategoryLexicon {
    pub fn new(categories: BTreeMap<String, Vec<String>>) -> Result<Self> {
        let mut lexicon = CategoryLexicon::default();
        for (category, phrases) in categories {
            if category.trim().is_empty() {
                return Err(Error::Config("lexicon category names must be non-empty".into()));
            }
            let set = lexicon.categories.entry(category.clone()).or_default();
            for phrase in phrases {
                let phrase = phrase.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
                if phrase.is_empty() {
                    return Err(Error::Config(format!("empty descriptor phrase in category `{category}`")));
                }
                set.insert(phrase);
            }
        }
        for (category, phrases) in &lexicon.categories {
            for phrase in phrases {
                lexicon.by_phrase.entry(phrase.clone()).or_default().push(category.clone());
            }
        }
        Ok(lexicon)
    }

    /// Read a JSON object mapping category names to phrase arrays.
    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_reader(reader)?;
        Self::new(raw)
    }

    /// The bundled 12-category lexicon (11 UniProt categories plus clinical trials).
    pub fn bundled() -> &'static CategoryLexicon {
        static LEXICON: OnceLock<CategoryLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| CategoryLexicon::from_json(BUNDLED_LEXICON.as_bytes()).expect("bundled lexicon is valid"))
    }

    pub fn category_names(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn contains(&self, category: &str) -> bool {
        self.categories.contains_key(category)
    }

    pub fn phrases(&self, category: &str) -> Option<&BTreeSet<String>> {
        self.categories.get(category)
    }

    /// Categories that list `phrase` (already lowercase) as a descriptor.
    pub fn categories_for(&self, phrase: &str) -> &[String] {
        self.by_phrase.get(phrase).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}
