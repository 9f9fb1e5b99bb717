use super::binary_search::{binary_search_with_coins, Subroutines};
use super::fixed::fpa_fixed;
use super::transcript::{MechanismKind, Outcome, Transcript};
use super::wrapper::final_with_coins;
use crate::auction::{Bidders, Deviation};
use crate::error::{Error, Result};
use crate::valuations::ValuationOracle;

/// Re-runs the mechanism recorded in `transcript` with the same coins.
/// With `deviation` set, one bidder's answers are overridden; otherwise the
/// deviation stored in the transcript (if any) is reused.
pub fn replay(
    transcript: &Transcript,
    oracles: &[ValuationOracle],
    deviation: Option<Deviation>,
) -> Result<Outcome> {
    if oracles.len() != transcript.n {
        return Err(Error::input(format!(
            "transcript has {} bidders, instance has {}",
            transcript.n,
            oracles.len()
        )));
    }
    let mut bidders = Bidders::new(oracles, transcript.m)?;
    if let Some(d) = deviation.or(transcript.deviation) {
        if d.bidder >= transcript.n {
            return Err(Error::input(format!(
                "deviating bidder {} is not in the instance",
                d.bidder
            )));
        }
        bidders = bidders.deviating(d);
    }
    let subs = Subroutines::default();
    let missing = |what: &str| {
        Error::input(format!(
            "{} transcript lacks `{what}`",
            transcript.mechanism
        ))
    };
    let mut out = match transcript.mechanism {
        MechanismKind::FpaFixed => {
            let prices = transcript
                .fixed_prices
                .as_ref()
                .ok_or_else(|| missing("fixed_prices"))?;
            fpa_fixed(&bidders, transcript.items, prices)?
        }
        MechanismKind::BinarySearch => {
            let coins = transcript
                .search_coins
                .as_ref()
                .ok_or_else(|| missing("search_coins"))?;
            let psi = transcript.psi.ok_or_else(|| missing("psi"))?;
            binary_search_with_coins(
                &bidders,
                transcript.items,
                psi,
                coins,
                transcript.seed,
                &subs,
            )?
        }
        MechanismKind::Final => {
            let wrapper = transcript
                .wrapper_coins
                .as_ref()
                .ok_or_else(|| missing("wrapper_coins"))?;
            let coins = transcript
                .search_coins
                .as_ref()
                .ok_or_else(|| missing("search_coins"))?;
            final_with_coins(
                &bidders,
                transcript.items,
                wrapper,
                coins,
                transcript.seed,
                &subs,
            )?
        }
    };
    out.transcript.seed = transcript.seed;
    Ok(out)
}
