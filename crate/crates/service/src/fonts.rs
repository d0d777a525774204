use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::Serialize;
use sha2::{Digest, Sha256};

use glyphctl::fontio::{load_font, Font, FontError};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FontInfo {
    /// First 16 hex digits of the file's SHA-256.
    pub id: String,
    pub name: String,
    pub units_per_em: u16,
    pub glyph_count: usize,
    pub mapped_chars: usize,
    pub builtin: bool,
}

struct Entry {
    info: FontInfo,
    font: Arc<Font>,
}

/// Fonts addressable by content id. Preloaded fonts are marked builtin.
#[derive(Default)]
pub struct FontRegistry {
    fonts: RwLock<BTreeMap<String, Entry>>,
}

pub fn font_id(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl FontRegistry {
    pub fn add(&self, bytes: &[u8], name: &str, builtin: bool) -> Result<FontInfo, FontError> {
        let id = font_id(bytes);
        if let Some(e) = self.fonts.read().expect("font registry lock").get(&id) {
            return Ok(e.info.clone());
        }
        let font = load_font(bytes)?;
        let info = FontInfo {
            id: id.clone(),
            name: name.to_string(),
            units_per_em: font.units_per_em(),
            glyph_count: font.glyph_count(),
            mapped_chars: font.codepoint_map().len(),
            builtin,
        };
        self.fonts.write().expect("font registry lock").insert(id, Entry { info: info.clone(), font: Arc::new(font) });
        Ok(info)
    }

    /// Loads every `.ttf` file in `dir`; unreadable or unsupported files are
    /// skipped with a warning. Returns the number loaded.
    pub fn load_dir(&self, dir: &Path) -> std::io::Result<usize> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("ttf")))
            .collect();
        paths.sort();
        let mut n = 0;
        for p in paths {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            match std::fs::read(&p).map_err(|e| e.to_string()).and_then(|b| self.add(&b, &name, true).map_err(|e| e.to_string())) {
                Ok(_) => n += 1,
                Err(e) => log::warn!("skipping font {}: {e}", p.display()),
            }
        }
        Ok(n)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Font>> {
        self.fonts.read().expect("font registry lock").get(id).map(|e| e.font.clone())
    }

    /// `(name, font)` pairs for the given ids, or for every font.
    pub fn named(&self, ids: Option<&[String]>) -> Result<Vec<(String, Arc<Font>)>, String> {
        let fonts = self.fonts.read().expect("font registry lock");
        match ids {
            None => Ok(fonts.values().map(|e| (e.info.name.clone(), e.font.clone())).collect()),
            Some(ids) => {
                ids.iter().map(|id| fonts.get(id).map(|e| (e.info.name.clone(), e.font.clone())).ok_or_else(|| id.clone())).collect()
            }
        }
    }

    pub fn list(&self) -> Vec<FontInfo> {
        self.fonts.read().expect("font registry lock").values().map(|e| e.info.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &[u8] = include_bytes!("../../core/fixtures/fonts/testsquare.ttf");

    #[test]
    fn ids_are_content_hashes() {
        let id = font_id(SQUARE);
        assert_eq!(id.len(), 16);
        assert!(id.chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(id, font_id(&SQUARE[..SQUARE.len() - 1]));
    }

    #[test]
    fn registry_dedupes_and_selects() {
        let reg = FontRegistry::default();
        let a = reg.add(SQUARE, "square", true).unwrap();
        let b = reg.add(SQUARE, "again", false).unwrap();
        assert_eq!(a, b);
        assert_eq!(reg.list().len(), 1);
        assert!(reg.get(&a.id).is_some());
        assert_eq!(reg.named(Some(&[a.id.clone()])).unwrap()[0].0, "square");
        assert_eq!(reg.named(Some(&["nope".to_string()])).unwrap_err(), "nope");
        assert!(reg.add(b"junk", "junk", false).is_err());
    }
}
