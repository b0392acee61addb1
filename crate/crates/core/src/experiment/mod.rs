//! Instance sweeps and the percentage tables built from them.

pub mod aggregate;
pub mod campaign;

pub use aggregate::{aggregate, AggregateRow, BucketBy, BucketKey, Comparison, Summary};
pub use campaign::{read_results, run_campaign, CampaignConfig, CampaignResults, CampaignRow, PolicyResult};
