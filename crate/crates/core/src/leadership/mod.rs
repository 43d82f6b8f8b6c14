//! Price leadership measures built on clusters and change logs.

mod initiators;
mod lag;

pub use initiators::{classify_initiators, leader_ratio, InitiatorStats, LeaderRatio, RatioValue};
pub use lag::{
    follow_screen, lag_distribution, CarriedItems, FollowFlag, LagCell, LagError, LagTable,
};
