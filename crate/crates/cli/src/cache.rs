use std::path::PathBuf;

use fracheat_core::kernel::{build_profile, default_profile_grid, BuildMethod, ProfileTable};
use fracheat_core::{ModelParams, Result};

pub const CACHE_ENV: &str = "FRACHEAT_CACHE";

fn path(params: &ModelParams, method: BuildMethod) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    let method = match method {
        BuildMethod::Direct => "direct",
        BuildMethod::Subordination => "subordination",
    };
    Some(PathBuf::from(dir).join(format!(
        "profile-v{}-{:016x}-{:016x}-{}-{method}.json",
        env!("CARGO_PKG_VERSION"),
        params.alpha().to_bits(),
        params.s().to_bits(),
        params.dim()
    )))
}

/// The profile on the default grid, read from or stored in `$FRACHEAT_CACHE`
/// when that is set. Unreadable cache entries are rebuilt.
pub fn profile(params: &ModelParams, method: BuildMethod) -> Result<ProfileTable> {
    let path = path(params, method);
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            if let Ok(t) = serde_json::from_str::<ProfileTable>(&text) {
                return Ok(t);
            }
        }
    }
    let table = build_profile(params, &default_profile_grid(params.dim())?, method)?;
    store(&table)?;
    Ok(table)
}

/// Stores a default-grid profile in the cache, if one is configured.
pub fn store(table: &ProfileTable) -> Result<()> {
    let Some(p) = path(&table.params, table.method) else {
        return Ok(());
    };
    if let Some(dir) = p.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = p.with_extension(format!("{}.tmp", std::process::id()));
    std::fs::write(&tmp, serde_json::to_vec(table)?)?;
    std::fs::rename(&tmp, &p)?;
    Ok(())
}
