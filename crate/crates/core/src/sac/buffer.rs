use rand::Rng;

/// A sampled minibatch, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<f64>,
    /// 1.0 where the episode ended, else 0.0.
    pub dones: Vec<f64>,
    pub obs_dim: usize,
    pub action_dim: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Squashed action in (-1, 1); scaled by `v_max` at the env boundary.
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring store of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    action_dim: usize,
    obs: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_obs: Vec<f64>,
    dones: Vec<f64>,
    cursor: usize,
    size: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            obs_dim,
            action_dim,
            obs: vec![0.0; capacity * obs_dim],
            actions: vec![0.0; capacity * action_dim],
            rewards: vec![0.0; capacity],
            next_obs: vec![0.0; capacity * obs_dim],
            dones: vec![0.0; capacity],
            cursor: 0,
            size: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, obs: &[f64], action: &[f64], reward: f64, next_obs: &[f64], done: bool) {
        assert_eq!(obs.len(), self.obs_dim);
        assert_eq!(next_obs.len(), self.obs_dim);
        assert_eq!(action.len(), self.action_dim);
        let i = self.cursor;
        let (o, a) = (self.obs_dim, self.action_dim);
        self.obs[i * o..(i + 1) * o].copy_from_slice(obs);
        self.next_obs[i * o..(i + 1) * o].copy_from_slice(next_obs);
        self.actions[i * a..(i + 1) * a].copy_from_slice(action);
        self.rewards[i] = reward;
        self.dones[i] = if done { 1.0 } else { 0.0 };
        self.cursor = (self.cursor + 1) % self.capacity;
        self.size = (self.size + 1).min(self.capacity);
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = Transition> + '_ {
        let start = if self.size < self.capacity { 0 } else { self.cursor };
        (0..self.size).map(move |k| self.get((start + k) % self.capacity))
    }

    fn get(&self, i: usize) -> Transition {
        let (o, a) = (self.obs_dim, self.action_dim);
        Transition {
            obs: self.obs[i * o..(i + 1) * o].to_vec(),
            action: self.actions[i * a..(i + 1) * a].to_vec(),
            reward: self.rewards[i],
            next_obs: self.next_obs[i * o..(i + 1) * o].to_vec(),
            done: self.dones[i] != 0.0,
        }
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Batch {
        assert!(self.size > 0, "sampling from an empty replay buffer");
        let (o, a) = (self.obs_dim, self.action_dim);
        let mut b = Batch {
            obs: Vec::with_capacity(batch * o),
            actions: Vec::with_capacity(batch * a),
            rewards: Vec::with_capacity(batch),
            next_obs: Vec::with_capacity(batch * o),
            dones: Vec::with_capacity(batch),
            obs_dim: o,
            action_dim: a,
        };
        for _ in 0..batch {
            let i = rng.gen_range(0..self.size);
            b.obs.extend_from_slice(&self.obs[i * o..(i + 1) * o]);
            b.actions.extend_from_slice(&self.actions[i * a..(i + 1) * a]);
            b.rewards.push(self.rewards[i]);
            b.next_obs.extend_from_slice(&self.next_obs[i * o..(i + 1) * o]);
            b.dones.push(self.dones[i]);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn push_n(buf: &mut ReplayBuffer, n: usize) {
        for k in 0..n {
            let x = k as f64;
            buf.push(&[x, x], &[x], x, &[x + 1.0, x + 1.0], k % 3 == 0);
        }
    }

    #[test]
    fn overflow_keeps_newest() {
        let mut buf = ReplayBuffer::new(5, 2, 1);
        push_n(&mut buf, 5 + 3);
        assert_eq!(buf.len(), 5);
        let rewards: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn samples_come_from_stored_items() {
        let mut buf = ReplayBuffer::new(10, 2, 1);
        push_n(&mut buf, 4);
        let b = buf.sample(64, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(b.len(), 64);
        for (k, r) in b.rewards.iter().enumerate() {
            assert!(*r < 4.0);
            assert_eq!(b.obs[2 * k], *r);
            assert_eq!(b.next_obs[2 * k], *r + 1.0);
        }
        // every stored item should show up in a large sample
        let b = buf.sample(400, &mut ChaCha8Rng::seed_from_u64(1));
        for v in 0..4 {
            assert!(b.rewards.contains(&(v as f64)));
        }
    }
}
