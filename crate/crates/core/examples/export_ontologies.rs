//! Writes the generated CR, SFR and LAP ontologies to a directory
//! (default `data/`). The files are what `[task] ontology = ...` loads.

use std::path::PathBuf;

use dialbench::domain::DomainCode;
use dialbench::env::standard_ontology;

fn main() -> dialbench::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir).map_err(|e| dialbench::Error::io(&dir, e))?;
    for code in DomainCode::ALL {
        let path = dir.join(format!("{code}.json"));
        standard_ontology(code).save(&path)?;
        println!("{}", path.display());
    }
    Ok(())
}
