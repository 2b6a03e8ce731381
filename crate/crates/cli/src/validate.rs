use std::path::Path;

use anyhow::Result;

use meshpaste_core::builder::database::validate_database;

pub fn run(db: &Path) -> Result<()> {
    let findings = validate_database(db)?;
    if findings.is_empty() {
        println!("database {} passes all invariant checks", db.display());
        Ok(())
    } else {
        for f in &findings {
            println!("[FAIL] {f}");
        }
        anyhow::bail!("{} finding(s)", findings.len());
    }
}
