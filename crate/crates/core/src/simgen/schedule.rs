use rand::Rng;

use super::world::{AgentKind, Pos, World};

pub(crate) const DAY_S: u32 = 86_400;

/// Presence in one cell, seconds after local midnight, half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stay {
    pub pos: Pos,
    pub start: u32,
    pub end: u32,
}

/// Replaces an agent's routine for one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DayOverride {
    Gathering { venue: Pos, start: u32, end: u32 },
    Hospital(Pos),
}

struct Plan<'w> {
    world: &'w World,
    stays: Vec<Stay>,
    at: Pos,
    t: u32,
}

impl<'w> Plan<'w> {
    fn new(world: &'w World, home: Pos) -> Self {
        Self { world, stays: Vec::new(), at: home, t: 0 }
    }

    fn push(&mut self, pos: Pos, until: u32) {
        let until = until.min(DAY_S);
        if until <= self.t {
            return;
        }
        match self.stays.last_mut() {
            Some(last) if last.pos == pos => last.end = until,
            _ => self.stays.push(Stay { pos, start: self.t, end: until }),
        }
        self.t = until;
        self.at = pos;
    }

    fn wait_until(&mut self, until: u32) {
        let here = self.at;
        self.push(here, until);
    }

    /// Moves one grid step at a time at a per-trip speed. The last cell
    /// before arrival gets a few extra minutes (parking, walking in).
    fn travel<R: Rng>(&mut self, to: Pos, rng: &mut R) {
        let spacing = self.world.config.cell_spacing_m;
        let speed_ms = rng.gen_range(20.0..70.0) / 3.6;
        let mut cur = self.at;
        let step = |a: u32, b: u32| {
            if a < b {
                a + 1
            } else if a > b {
                a - 1
            } else {
                a
            }
        };
        while cur.chebyshev(to) > 1 {
            let next = Pos { row: step(cur.row, to.row), col: step(cur.col, to.col) };
            let diag = next.row != cur.row && next.col != cur.col;
            let dist = if diag { spacing * std::f64::consts::SQRT_2 } else { spacing };
            let mut dwell = (dist / speed_ms).round() as u32;
            if next.chebyshev(to) <= 1 {
                dwell += rng.gen_range(180..=480);
            }
            let t = self.t;
            self.push(next, t + dwell.max(1));
            cur = next;
        }
        self.at = cur;
        if cur != to {
            // Enter the destination now; the caller extends the stay.
            self.stays.push(Stay { pos: to, start: self.t, end: self.t });
            self.at = to;
        }
    }

    /// Travels to `to` and stays until `until`.
    fn visit<R: Rng>(&mut self, to: Pos, until: u32, rng: &mut R) {
        if self.t >= DAY_S {
            return;
        }
        self.travel(to, rng);
        match self.stays.last_mut() {
            Some(last) if last.pos == to && last.end == self.t => {
                last.end = until.min(DAY_S).max(last.end);
                self.t = last.end;
            }
            _ => self.wait_until(until),
        }
    }

    fn finish<R: Rng>(mut self, home: Pos, rng: &mut R) -> Vec<Stay> {
        if self.t < DAY_S {
            if self.at != home {
                self.travel(home, rng);
            }
            self.wait_until(DAY_S);
        }
        let mut out: Vec<Stay> = Vec::with_capacity(self.stays.len());
        for mut s in self.stays {
            s.end = s.end.min(DAY_S);
            if s.end <= s.start {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.pos == s.pos => last.end = s.end,
                _ => out.push(s),
            }
        }
        out
    }
}

/// One agent's stays for one day, covering `[0, 86400)` without gaps.
pub(crate) fn day_plan<R: Rng>(
    world: &World,
    agent: usize,
    day_override: Option<DayOverride>,
    rng: &mut R,
) -> Vec<Stay> {
    let a = &world.agents[agent];
    let home = a.home;
    let mut plan = Plan::new(world, home);
    match day_override {
        Some(DayOverride::Hospital(h)) => {
            plan.push(h, DAY_S);
            return plan.stays;
        }
        Some(DayOverride::Gathering { venue, start, end }) => {
            plan.wait_until(start.saturating_sub(1800));
            plan.visit(venue, end, rng);
            plan.visit(home, DAY_S, rng);
        }
        None => match a.kind {
            AgentKind::Commuter => {
                let work = a.work.expect("commuters have a workplace");
                let depart = a.depart_s + rng.gen_range(0..=1800) - 900;
                plan.wait_until(depart);
                let off = depart + a.work_s + rng.gen_range(0..=3600) - 1800;
                plan.visit(work, off, rng);
                if rng.gen_bool(a.errand_prob) {
                    let errand = world.near(home, 3, rng);
                    let until = plan.t + rng.gen_range(1800..=5400);
                    plan.visit(errand, until, rng);
                }
                plan.visit(home, DAY_S, rng);
            }
            AgentKind::Homebody => {
                for slot in [9 * 3600, 15 * 3600] {
                    if rng.gen_bool(a.errand_prob) {
                        let start = slot + rng.gen_range(0..3 * 3600);
                        plan.wait_until(start);
                        let errand = world.near(home, 3, rng);
                        let until = plan.t.max(start) + rng.gen_range(1800..=7200);
                        plan.visit(errand, until, rng);
                        plan.visit(home, plan.t, rng);
                    }
                }
                plan.wait_until(DAY_S);
            }
            AgentKind::Roamer => {
                plan.wait_until(a.depart_s + rng.gen_range(0..=3600));
                for _ in 0..rng.gen_range(2..=4) {
                    let stop = world.near(home, 12, rng);
                    let until = plan.t + rng.gen_range(3600..=3 * 3600);
                    plan.visit(stop, until, rng);
                }
                plan.visit(home, DAY_S, rng);
            }
        },
    }
    let mut stays = plan.finish(home, rng);
    add_pingpong(world, &mut stays, rng);
    stays
}

/// Inserts brief hand-offs to a neighbouring cell inside long stays.
fn add_pingpong<R: Rng>(world: &World, stays: &mut Vec<Stay>, rng: &mut R) {
    let p = world.config.pingpong_prob;
    if p == 0.0 {
        return;
    }
    let mut out = Vec::with_capacity(stays.len() + 4);
    for s in stays.drain(..) {
        if s.end - s.start > 1200 && rng.gen_bool(p) {
            let blip = rng.gen_range(10..=90);
            let at = s.start + rng.gen_range(300..s.end - s.start - 300 - blip);
            let neighbour = world.near(s.pos, 1, rng);
            if neighbour != s.pos {
                out.push(Stay { end: at, ..s });
                out.push(Stay { pos: neighbour, start: at, end: at + blip });
                out.push(Stay { start: at + blip, ..s });
                continue;
            }
        }
        out.push(s);
    }
    *stays = out;
}
