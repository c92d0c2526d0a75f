//! A simulated market in a binary security among log-utility agents.
//!
//! An agent with belief `b` and wealth `W` facing price `π` optimally holds
//! `W b / π` claims on the event and `W (1 - b) / (1 - π)` claims against it.
//! Clearing these demands gives the wealth-weighted mean belief as the
//! equilibrium price, and settlement pays each agent its claims on the
//! realised side, which conserves total wealth.

use crate::aggregate::Aggregator;
use crate::domain::{Outcome, PredictionRow};
use crate::error::{check_prob, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub wealth: f64,
    pub prior_belief: f64,
    pub posterior_belief: f64,
}

impl Agent {
    pub fn new(wealth: f64) -> Self {
        Self {
            wealth,
            prior_belief: 0.5,
            posterior_belief: 0.5,
        }
    }

    pub fn is_eliminated(&self) -> bool {
        self.wealth <= 0.0
    }
}

/// Wealth-weighted mean of `(belief, wealth)` pairs.
pub fn equilibrium_price(participants: impl IntoIterator<Item = (f64, f64)>) -> Result<f64> {
    let (num, den) = participants
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .fold((0.0, 0.0), |(n, d), (b, w)| (n + b * w, d + w));
    if den > 0.0 {
        Ok((num / den).clamp(0.0, 1.0))
    } else {
        Err(Error::NoMarket)
    }
}

/// Wealth after the security pays out. Agents whose belief equals the price
/// hold no net position; a price of exactly 0 or 1 arises only when every
/// trader agrees, in which case nobody trades.
pub fn settle_wealth(wealth: f64, belief: f64, price: f64, y: Outcome) -> f64 {
    if wealth <= 0.0 || belief == price || price <= 0.0 || price >= 1.0 {
        return wealth.max(0.0);
    }
    match y {
        Outcome::One => wealth * belief / price,
        Outcome::Zero => wealth * (1.0 - belief) / (1.0 - price),
    }
}

/// Settles `(belief, wealth)` pairs in place.
pub fn settle(agents: &mut [(f64, f64)], price: f64, y: Outcome) {
    for (b, w) in agents.iter_mut() {
        *w = settle_wealth(*w, *b, price, y);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConfig {
    pub initial_wealth: f64,
    pub price_tol: f64,
    pub max_iters: usize,
    /// Average beliefs toward the price exactly once instead of iterating.
    pub single_update: bool,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            initial_wealth: 1.0,
            price_tol: 1e-9,
            max_iters: 100,
            single_update: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MarketRound {
    pub price: f64,
    /// Participating agent indices.
    pub participants: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Market {
    config: MarketConfig,
    agents: Vec<Agent>,
}

impl Market {
    pub fn new(n_agents: usize, config: MarketConfig) -> Self {
        Self {
            config,
            agents: vec![Agent::new(config.initial_wealth); n_agents],
        }
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn total_wealth(&self) -> f64 {
        self.agents.iter().map(|a| a.wealth).sum()
    }

    pub fn agents_mut(&mut self) -> &mut [Agent] {
        &mut self.agents
    }

    /// Sets priors from the row and runs the belief/price iteration. Beliefs
    /// of participants are left at their equilibrium posteriors.
    pub fn open_round(&mut self, row: &PredictionRow) -> Result<MarketRound> {
        let participants: Vec<usize> = row
            .iter()
            .filter(|&(i, _)| !self.agents[i].is_eliminated())
            .map(|(i, _)| i)
            .collect();
        if participants.is_empty() {
            return Err(Error::NoMarket);
        }
        for (i, p) in row.iter() {
            check_prob("belief", p)?;
            let agent = &mut self.agents[i];
            if !agent.is_eliminated() {
                agent.prior_belief = p;
                agent.posterior_belief = p;
            }
        }
        let price_of = |agents: &[Agent]| {
            equilibrium_price(participants.iter().map(|&i| (agents[i].posterior_belief, agents[i].wealth)))
        };
        let mut price = price_of(&self.agents)?;
        let max_iters = if self.config.single_update { 1 } else { self.config.max_iters };
        let mut iterations = 0;
        for _ in 0..max_iters {
            iterations += 1;
            for &i in &participants {
                let a = &mut self.agents[i];
                a.posterior_belief = 0.5 * (a.posterior_belief + price);
            }
            let next = price_of(&self.agents)?;
            let delta = (next - price).abs();
            price = next;
            if delta < self.config.price_tol {
                break;
            }
        }
        Ok(MarketRound {
            price,
            participants,
            iterations,
        })
    }

    /// Pays out the round. Each participant's claims on the realised side are
    /// scaled by the participants' total wealth over the total claims, which
    /// equals `1 / price` or `1 / (1 - price)` in exact arithmetic but keeps the sum intact
    /// when the price sits next to 0 or 1.
    pub fn settle_round(&mut self, round: &MarketRound, y: Outcome) {
        if round.price <= 0.0 || round.price >= 1.0 {
            return;
        }
        let stake = |a: &Agent| match y {
            Outcome::One => a.wealth * a.posterior_belief,
            Outcome::Zero => a.wealth * (1.0 - a.posterior_belief),
        };
        let (mut claims, mut wealth) = (0.0, 0.0);
        for &i in &round.participants {
            claims += stake(&self.agents[i]);
            wealth += self.agents[i].wealth;
        }
        if claims <= 0.0 {
            return;
        }
        let rate = wealth / claims;
        for &i in &round.participants {
            let a = &mut self.agents[i];
            if a.posterior_belief != round.price {
                a.wealth = stake(a) * rate;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MarketAggregator {
    name: String,
    market: Market,
    pending: Option<MarketRound>,
}

impl MarketAggregator {
    pub fn new(n_experts: usize, config: MarketConfig) -> Self {
        let name = if config.single_update {
            "market:single-update"
        } else {
            "market"
        };
        Self {
            name: name.into(),
            market: Market::new(n_experts, config),
            pending: None,
        }
    }

    pub fn market(&self) -> &Market {
        &self.market
    }
}

impl Aggregator for MarketAggregator {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&mut self, row: &PredictionRow) -> Result<f64> {
        self.pending = None;
        let round = self.market.open_round(row)?;
        let price = round.price;
        self.pending = Some(round);
        Ok(price)
    }

    fn observe(&mut self, outcome: Outcome) {
        if let Some(round) = self.pending.take() {
            self.market.settle_round(&round, outcome);
        }
    }
}
