#include "lae/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lae/kernels.hpp"

namespace lae::ppo {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

Mat column(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void PruneSchedule::validate() const {
    require(w_init >= 0.0 && w_init <= 1.0 && w_target >= 0.0 && w_target <= 1.0, "densities must lie in [0,1]");
    require(w_target <= w_init, "target density must not exceed initial density");
    require(prune_steps >= 1 && frequency >= 1, "prune_steps and frequency must be >= 1");
    require(start_epoch >= 0, "start_epoch must be >= 0");
}

void TrainConfig::validate() const {
    require(epochs >= 0 && steps_per_epoch >= 1, "epochs >= 0 and steps_per_epoch >= 1 required");
    require(actor_lr >= 0 && critic_lr >= 0, "learning rates must be nonnegative");
    require(gamma > 0 && gamma <= 1 && gae_lambda >= 0 && gae_lambda <= 1, "gamma in (0,1], lambda in [0,1]");
    require(clip > 0 && clip < 1, "clip must lie in (0,1)");
    require(minibatch >= 1 && update_epochs >= 1, "minibatch and update_epochs must be >= 1");
    require(!hidden.empty(), "at least one hidden layer required");
    for (int h : hidden) require(h >= 1, "hidden widths must be positive");
    prune.validate();
}

ActorCritic::ActorCritic(int obs_dim, const std::vector<int>& hidden, double init_log_std, double floor,
                         double ceiling, std::mt19937_64& rng)
    : actor(obs_dim, hidden, 1, rng, 0.01),
      critic(obs_dim, hidden, 1, rng, 1.0),
      log_std(init_log_std),
      price_floor(floor),
      price_ceiling(ceiling) {}

PolicyOutput forward_masked(const ActorCritic& ac, const Mat& obs) {
    PolicyOutput out;
    out.pre = ac.actor.forward(obs).row(0).transpose();
    const double range = ac.price_ceiling - ac.price_floor;
    out.mean = out.pre.unaryExpr([&](double z) { return ac.price_floor + range * sigmoid(z); });
    out.log_std = ac.log_std;
    out.value = ac.critic.forward(obs).row(0).transpose();
    return out;
}

double log_prob(double action, double mean, double log_std) {
    const double z = (action - mean) * std::exp(-log_std);
    return -0.5 * z * z - log_std - kLogSqrt2Pi;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                        double bootstrap_value, double gamma, double lambda) {
    const auto T = rewards.size();
    require(values.size() == T && dones.size() == T, "gae needs aligned sequences");
    std::vector<double> adv(T, 0.0);
    double running = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        const double next_value = t + 1 < T ? values[t + 1] : bootstrap_value;
        const double live = dones[t] ? 0.0 : 1.0;
        const double delta = rewards[t] + gamma * next_value * live - values[t];
        running = delta + gamma * lambda * live * running;
        adv[t] = running;
    }
    return adv;
}

ActorLoss ppo_actor_loss(const Batch& batch, const ActorCritic& ac, double clip) {
    const auto B = batch.actions.size();
    require(B > 0 && batch.obs.cols() == B && batch.old_logp.size() == B && batch.advantages.size() == B,
            "actor batch is misaligned");
    nn::MaskedNetwork::Cache cache;
    const Mat pre = ac.actor.forward(batch.obs, cache);

    Vec adv = batch.advantages;
    if (B > 1) {
        const double mu = adv.mean();
        const double sd = std::sqrt((adv.array() - mu).square().mean());
        adv = (adv.array() - mu) / (sd + 1e-8);
    }

    const double range = ac.price_ceiling - ac.price_floor;
    const double var = std::exp(2.0 * ac.log_std);
    const double inv_b = 1.0 / static_cast<double>(B);

    ActorLoss out;
    Mat d_pre(1, B);
    int clipped = 0;
    for (Eigen::Index i = 0; i < B; ++i) {
        const double sig = sigmoid(pre(0, i));
        const double mean = ac.price_floor + range * sig;
        const double a = batch.actions[i];
        const double ratio = std::exp(log_prob(a, mean, ac.log_std) - batch.old_logp[i]);
        const double unclipped = ratio * adv[i];
        const double clipped_term = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv[i];
        double d_logp = 0.0;
        if (unclipped <= clipped_term) {
            out.loss -= unclipped * inv_b;
            d_logp = -ratio * adv[i] * inv_b;
        } else {
            out.loss -= clipped_term * inv_b;
            ++clipped;
        }
        const double diff = a - mean;
        d_pre(0, i) = d_logp * (diff / var) * range * sig * (1.0 - sig);
        out.d_log_std += d_logp * (diff * diff / var - 1.0);
    }
    out.grad = ac.actor.backward(cache, d_pre);
    out.clip_fraction = static_cast<double>(clipped) * inv_b;
    return out;
}

CriticLoss critic_loss(const Batch& batch, const ActorCritic& ac) {
    const auto B = batch.returns.size();
    require(B > 0 && batch.obs.cols() == B, "critic batch is misaligned");
    nn::MaskedNetwork::Cache cache;
    const Mat v = ac.critic.forward(batch.obs, cache);
    const Mat diff = v - batch.returns.transpose();
    CriticLoss out;
    out.loss = diff.array().square().mean();
    out.grad = ac.critic.backward(cache, (2.0 / static_cast<double>(B)) * diff);
    return out;
}

Optimizer::Optimizer(OptimizerKind kind, const ActorCritic& ac) : kind_(kind) {
    auto init = [](const nn::MaskedNetwork& net, Moments& m) {
        for (const auto& l : net.layers()) {
            m.mW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
            m.vW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
            m.mb.push_back(Vec::Zero(l.b.size()));
            m.vb.push_back(Vec::Zero(l.b.size()));
        }
    };
    if (kind_ == OptimizerKind::Adam) {
        init(ac.actor, actor_);
        init(ac.critic, critic_);
    }
}

namespace {

double grad_norm(const nn::MaskedNetwork::Gradient& g, double extra = 0.0) {
    double s = extra * extra;
    for (std::size_t h = 0; h < g.dW.size(); ++h) s += g.dW[h].squaredNorm() + g.db[h].squaredNorm();
    return std::sqrt(s);
}

void sgd(nn::MaskedNetwork& net, const nn::MaskedNetwork::Gradient& g, double lr) {
    auto& layers = net.layers();
    for (std::size_t h = 0; h < layers.size(); ++h) {
        layers[h].W -= lr * g.dW[h];
        layers[h].b -= lr * g.db[h];
    }
}

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

}  // namespace

void Optimizer::adam(nn::MaskedNetwork& net, const nn::MaskedNetwork::Gradient& g, Moments& m, double lr,
                     double scale) {
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto& layers = net.layers();
    for (std::size_t h = 0; h < layers.size(); ++h) {
        m.mW[h] = kBeta1 * m.mW[h] + (1 - kBeta1) * scale * g.dW[h];
        m.vW[h] = kBeta2 * m.vW[h] + (1 - kBeta2) * (scale * g.dW[h]).cwiseAbs2();
        m.mb[h] = kBeta1 * m.mb[h] + (1 - kBeta1) * scale * g.db[h];
        m.vb[h] = kBeta2 * m.vb[h] + (1 - kBeta2) * (scale * g.db[h]).cwiseAbs2();
        layers[h].W.array() -= lr * (m.mW[h].array() / c1) / ((m.vW[h].array() / c2).sqrt() + kAdamEps);
        layers[h].b.array() -= lr * (m.mb[h].array() / c1) / ((m.vb[h].array() / c2).sqrt() + kAdamEps);
    }
}

void Optimizer::step(ActorCritic& ac, const ActorLoss& actor, const CriticLoss& critic, double actor_lr,
                     double critic_lr, double max_grad_norm) {
    double actor_scale = 1.0;
    double critic_scale = 1.0;
    if (max_grad_norm > 0.0) {
        const double an = grad_norm(actor.grad, actor.d_log_std);
        const double cn = grad_norm(critic.grad);
        if (an > max_grad_norm) actor_scale = max_grad_norm / an;
        if (cn > max_grad_norm) critic_scale = max_grad_norm / cn;
    }
    ++t_;
    if (kind_ == OptimizerKind::Sgd) {
        sgd(ac.actor, actor.grad, actor_lr * actor_scale);
        sgd(ac.critic, critic.grad, critic_lr * critic_scale);
        ac.log_std -= actor_lr * actor_scale * actor.d_log_std;
    } else {
        adam(ac.actor, actor.grad, actor_, actor_lr, actor_scale);
        adam(ac.critic, critic.grad, critic_, critic_lr, critic_scale);
        const double g = actor_scale * actor.d_log_std;
        m_std_ = kBeta1 * m_std_ + (1 - kBeta1) * g;
        v_std_ = kBeta2 * v_std_ + (1 - kBeta2) * g * g;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        ac.log_std -= actor_lr * (m_std_ / c1) / (std::sqrt(v_std_ / c2) + kAdamEps);
    }
    ac.actor.apply_masks();
    ac.critic.apply_masks();
}

UpdateStats update(ActorCritic& ac, const Batch& batch, const TrainConfig& config, Optimizer& opt) {
    const auto actor = ppo_actor_loss(batch, ac, config.clip);
    const auto critic = critic_loss(batch, ac);
    if (!std::isfinite(actor.loss) || !std::isfinite(critic.loss)) {
        throw Error(ErrorKind::TrainingDiverged, "non-finite loss");
    }
    opt.step(ac, actor, critic, config.actor_lr, config.critic_lr, config.max_grad_norm);
    return {actor.loss, critic.loss};
}

double sparsity_schedule(int epoch, const PruneSchedule& s) {
    if (epoch < s.start_epoch) return s.w_init;
    const double span = static_cast<double>(s.prune_steps) * static_cast<double>(s.frequency);
    const double progress = std::min(1.0, static_cast<double>(epoch - s.start_epoch) / span);
    const double cubic = std::pow(1.0 - progress, 3);
    if (s.literal_schedule) return std::clamp(s.w_init + (s.w_init - s.w_target) * cubic, 0.0, 1.0);
    return std::clamp(s.w_target + (s.w_init - s.w_target) * cubic, s.w_target, s.w_init);
}

Vec neuron_importance(const nn::MaskedNetwork& net, std::size_t layer) {
    require(layer < net.hidden_count(), "importance is defined for hidden layers only");
    const auto& l = net.layers()[layer];
    return l.W.cwiseAbs().rowwise().sum() + l.b.cwiseAbs();
}

double prune_threshold(std::span<const double> scores, double density, ThresholdMode mode) {
    require(density >= 0.0 && density <= 1.0, "density must lie in [0,1]");
    require(!scores.empty(), "no scores");
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    const auto J = scores.size();
    switch (mode) {
        case ThresholdMode::MeanScaled: return total * (1.0 - density) / static_cast<double>(J);
        case ThresholdMode::Raw: return total * density;
        case ThresholdMode::Quantile: break;
    }
    const auto keep = static_cast<std::size_t>(std::llround(density * static_cast<double>(J)));
    const auto drop = J - std::min(keep, J);
    if (drop == 0) return 0.0;
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    if (drop >= J) return std::nextafter(sorted.back(), std::numeric_limits<double>::infinity());
    return sorted[drop];
}

std::size_t apply_pruning(nn::MaskedNetwork& net, std::size_t layer, double phi) {
    require(phi >= 0.0, "threshold must be nonnegative");
    const Vec scores = neuron_importance(net, layer);
    auto& mask = net.layers()[layer].mask;
    Vec next = mask;
    for (Eigen::Index j = 0; j < next.size(); ++j) {
        if (scores[j] < phi) next[j] = 0.0;
    }
    if (next.sum() == 0.0) {
        throw Error(ErrorKind::LayerCollapse, "threshold would prune every neuron of hidden layer " + std::to_string(layer));
    }
    const auto pruned = static_cast<std::size_t>(mask.sum() - next.sum());
    mask = next;
    net.apply_masks();
    return pruned;
}

PruneEvent prune_all(ActorCritic& ac, double density, ThresholdMode mode, int epoch) {
    PruneEvent ev;
    ev.epoch = epoch;
    ev.density = density;
    auto run = [&](nn::MaskedNetwork& net, const char* name) {
        for (std::size_t h = 0; h < net.hidden_count(); ++h) {
            const Vec s = neuron_importance(net, h);
            const double phi = prune_threshold(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())),
                                               density, mode);
            try {
                apply_pruning(net, h, phi);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::LayerCollapse) throw;
                ev.skipped.push_back(std::string(name) + " layer " + std::to_string(h));
            }
        }
    };
    run(ac.actor, "actor");
    run(ac.critic, "critic");
    return ev;
}

namespace {

struct Rollout {
    std::vector<double> obs;  // obs_dim per step, contiguous
    std::vector<double> actions, logp, values, rewards;
    std::vector<bool> dones;
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Mat obs_matrix(const env::PricingEnv& env, int agent) {
    const auto& cfg = env.config();
    const auto flat = env::flatten(env.observations()[static_cast<std::size_t>(agent)], cfg.price_ceiling,
                                   cfg.game.leaders[static_cast<std::size_t>(agent)].capacity);
    return column(flat);
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double evaluate(const env::EnvConfig& env_config, const TrainResult& result, std::vector<double>* prices,
                std::vector<double>* demands) {
    env::PricingEnv env(env_config);
    env.reset(env_config.seed);
    const int agents = env.agents();
    double total = 0.0;
    long count = 0;
    env::StepResult last;
    for (int t = 0; t < env_config.episode_len; ++t) {
        std::vector<double> actions(static_cast<std::size_t>(agents));
        for (int n = 0; n < agents; ++n) {
            const auto& ac = result.policies[static_cast<std::size_t>(result.policy_of_agent[static_cast<std::size_t>(n)])];
            actions[static_cast<std::size_t>(n)] = forward_masked(ac, obs_matrix(env, n)).mean[0];
        }
        last = env.step(actions);
        for (double r : last.rewards) total += r;
        count += agents;
    }
    if (prices) *prices = last.prices;
    if (demands) *demands = last.demands;
    return count ? total / static_cast<double>(count) : 0.0;
}

TrainResult train(const env::EnvConfig& env_config, const TrainConfig& config) {
    config.validate();
    env::PricingEnv env(env_config);
    const int agents = env.agents();
    const int obs_dim = 2 * env_config.window_len;

    TrainResult result;
    const int policy_count = config.shared_weights ? 1 : agents;
    for (int p = 0; p < policy_count; ++p) {
        std::mt19937_64 init_rng(stream_seed(config.seed, 1, static_cast<std::uint64_t>(p)));
        result.policies.emplace_back(obs_dim, config.hidden, config.init_log_std, env_config.price_floor,
                                     env_config.price_ceiling, init_rng);
    }
    for (int n = 0; n < agents; ++n) result.policy_of_agent.push_back(config.shared_weights ? 0 : n);

    std::vector<Optimizer> optimizers;
    std::vector<std::mt19937_64> shuffle_rng;
    for (int p = 0; p < policy_count; ++p) {
        optimizers.emplace_back(config.optimizer, result.policies[static_cast<std::size_t>(p)]);
        shuffle_rng.emplace_back(stream_seed(config.seed, 2, static_cast<std::uint64_t>(p)));
    }
    std::vector<std::mt19937_64> action_rng;
    for (int n = 0; n < agents; ++n) action_rng.emplace_back(stream_seed(config.seed, 3, static_cast<std::uint64_t>(n)));

    env::EnvConfig rollout_config = env_config;
    rollout_config.episode_len = config.steps_per_epoch;
    env::PricingEnv rollout_env(rollout_config);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();

        // Phase 1: interaction.
        rollout_env.reset(stream_seed(env_config.seed, 4, static_cast<std::uint64_t>(epoch)));
        std::vector<Rollout> roll(static_cast<std::size_t>(agents));
        std::vector<double> epoch_rewards;
        for (int t = 0; t < config.steps_per_epoch; ++t) {
            std::vector<double> actions(static_cast<std::size_t>(agents));
            for (int n = 0; n < agents; ++n) {
                const auto& ac = result.policies[static_cast<std::size_t>(result.policy_of_agent[static_cast<std::size_t>(n)])];
                const Mat o = obs_matrix(rollout_env, n);
                const auto out = forward_masked(ac, o);
                std::normal_distribution<double> noise(0.0, 1.0);
                const double a = out.mean[0] + std::exp(ac.log_std) * noise(action_rng[static_cast<std::size_t>(n)]);
                auto& r = roll[static_cast<std::size_t>(n)];
                r.obs.insert(r.obs.end(), o.data(), o.data() + o.size());
                r.actions.push_back(a);
                r.logp.push_back(log_prob(a, out.mean[0], ac.log_std));
                r.values.push_back(out.value[0]);
                actions[static_cast<std::size_t>(n)] = a;
            }
            const auto step = rollout_env.step(actions);
            for (int n = 0; n < agents; ++n) {
                auto& r = roll[static_cast<std::size_t>(n)];
                r.rewards.push_back(step.rewards[static_cast<std::size_t>(n)]);
                r.dones.push_back(step.done || t + 1 == config.steps_per_epoch);
                epoch_rewards.push_back(step.rewards[static_cast<std::size_t>(n)]);
            }
        }

        // Phase 2: advantages, merged per policy in agent order.
        std::vector<Batch> batches(static_cast<std::size_t>(policy_count));
        {
            std::vector<std::vector<double>> obs(batches.size()), act(batches.size()), logp(batches.size()),
                adv(batches.size()), ret(batches.size());
            for (int n = 0; n < agents; ++n) {
                const auto& r = roll[static_cast<std::size_t>(n)];
                const auto p = static_cast<std::size_t>(result.policy_of_agent[static_cast<std::size_t>(n)]);
                // std::vector<bool> is not contiguous.
                const auto flags = std::make_unique<bool[]>(r.dones.size());
                std::copy(r.dones.begin(), r.dones.end(), flags.get());
                const auto a = gae(r.rewards, r.values, std::span<const bool>(flags.get(), r.dones.size()), 0.0,
                                   config.gamma, config.gae_lambda);
                obs[p].insert(obs[p].end(), r.obs.begin(), r.obs.end());
                act[p].insert(act[p].end(), r.actions.begin(), r.actions.end());
                logp[p].insert(logp[p].end(), r.logp.begin(), r.logp.end());
                adv[p].insert(adv[p].end(), a.begin(), a.end());
                for (std::size_t i = 0; i < a.size(); ++i) ret[p].push_back(a[i] + r.values[i]);
            }
            for (std::size_t p = 0; p < batches.size(); ++p) {
                const auto count = static_cast<Eigen::Index>(act[p].size());
                batches[p].obs = Eigen::Map<const Mat>(obs[p].data(), obs_dim, count);
                batches[p].actions = column(act[p]);
                batches[p].old_logp = column(logp[p]);
                batches[p].advantages = column(adv[p]);
                batches[p].returns = column(ret[p]);
            }
        }

        // Phase 2b: minibatch updates, independent per policy.
        std::vector<double> actor_losses(batches.size(), 0.0), critic_losses(batches.size(), 0.0);
        std::vector<int> diverged(batches.size(), 0);
#pragma omp parallel for schedule(static) if (policy_count > 1)
        for (int p = 0; p < policy_count; ++p) {
            const auto pi = static_cast<std::size_t>(p);
            const auto& full = batches[pi];
            const auto count = full.actions.size();
            std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
            std::iota(order.begin(), order.end(), 0);
            int updates = 0;
            try {
                for (int k = 0; k < config.update_epochs; ++k) {
                    std::shuffle(order.begin(), order.end(), shuffle_rng[pi]);
                    for (Eigen::Index start = 0; start < count; start += config.minibatch) {
                        const Eigen::Index len = std::min<Eigen::Index>(config.minibatch, count - start);
                        Batch mb;
                        mb.obs.resize(obs_dim, len);
                        mb.actions.resize(len);
                        mb.old_logp.resize(len);
                        mb.advantages.resize(len);
                        mb.returns.resize(len);
                        for (Eigen::Index j = 0; j < len; ++j) {
                            const auto src = order[static_cast<std::size_t>(start + j)];
                            mb.obs.col(j) = full.obs.col(src);
                            mb.actions[j] = full.actions[src];
                            mb.old_logp[j] = full.old_logp[src];
                            mb.advantages[j] = full.advantages[src];
                            mb.returns[j] = full.returns[src];
                        }
                        const auto stats = update(result.policies[pi], mb, config, optimizers[pi]);
                        actor_losses[pi] += stats.actor_loss;
                        critic_losses[pi] += stats.critic_loss;
                        ++updates;
                    }
                }
            } catch (const Error&) {
                diverged[pi] = 1;
            }
            if (updates) {
                actor_losses[pi] /= updates;
                critic_losses[pi] /= updates;
            }
        }
        for (std::size_t p = 0; p < diverged.size(); ++p) {
            if (diverged[p]) {
                throw TrainingDiverged("policy " + std::to_string(p) + " produced a non-finite loss in epoch " +
                                           std::to_string(epoch),
                                       result.metrics);
            }
        }

        // Phase 3: structured pruning.
        const auto& ps = config.prune;
        if (ps.enabled && epoch >= ps.start_epoch && (epoch - ps.start_epoch) % ps.frequency == 0 &&
            epoch - ps.start_epoch <= ps.prune_steps * ps.frequency) {
            const double density = sparsity_schedule(epoch, ps);
            PruneEvent merged{epoch, density, {}};
            for (std::size_t k = 0; k < result.policies.size(); ++k) {
                const auto ev = prune_all(result.policies[k], density, ps.threshold, epoch);
                for (const auto& s : ev.skipped) merged.skipped.push_back("policy " + std::to_string(k) + " " + s);
            }
            result.prune_events.push_back(std::move(merged));
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.mean_reward = mean_of(epoch_rewards);
        m.test_reward = evaluate(env_config, result, &m.prices, &m.demands);
        m.actor_loss = mean_of(actor_losses);
        m.critic_loss = mean_of(critic_losses);
        double d = 0.0, dc = 0.0;
        for (const auto& ac : result.policies) {
            d += ac.actor.density();
            dc += ac.critic.density();
        }
        m.density = d / static_cast<double>(result.policies.size());
        m.critic_density = dc / static_cast<double>(result.policies.size());
        if (!std::isfinite(m.mean_reward) || !std::isfinite(m.test_reward)) {
            throw TrainingDiverged("non-finite reward in epoch " + std::to_string(epoch), result.metrics);
        }
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.metrics.push_back(std::move(m));
    }
    return result;
}

double greedy_policy(const env::Observation& obs, const GreedyKnowledge& k, double price_floor, double price_ceiling) {
    const env::Observation::Entry* newest = nullptr;
    for (auto it = obs.window.rbegin(); it != obs.window.rend(); ++it) {
        if (it->price > 0.0 && it->demand > 0.0) {
            newest = &*it;
            break;
        }
    }
    if (!newest) return 0.5 * (price_floor + price_ceiling);
    const double inv_eff = k.inv_eff_sum.value_or(0.0);
    const double theta = newest->price * (newest->demand + inv_eff);
    const auto predicted = [&](double p) {
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        const double demand = std::clamp(theta / p - inv_eff, 0.0, k.capacity);
        return (p - k.unit_cost) * demand;
    };
    return kernels::grid_argmax_serial(predicted, price_floor, price_ceiling, 100).x;
}

double random_policy(std::mt19937_64& rng, double price_floor, double price_ceiling) {
    if (price_floor == price_ceiling) return price_floor;
    std::uniform_real_distribution<double> u(price_floor, price_ceiling);
    return u(rng);
}

std::vector<EpochMetrics> run_baseline(const env::EnvConfig& env_config, Baseline kind, int epochs,
                                       std::uint64_t seed, bool greedy_knows_channels) {
    env::PricingEnv env(env_config);
    const int agents = env.agents();
    std::vector<GreedyKnowledge> know(static_cast<std::size_t>(agents));
    for (int n = 0; n < agents; ++n) {
        const auto& leader = env_config.game.leaders[static_cast<std::size_t>(n)];
        auto& kn = know[static_cast<std::size_t>(n)];
        kn.unit_cost = leader.unit_cost;
        kn.capacity = leader.capacity;
        if (greedy_knows_channels) {
            double h = 0.0;
            for (int i : env_config.game.users_of(n)) h += 1.0 / env_config.game.followers[static_cast<std::size_t>(i)].spectral_eff;
            kn.inv_eff_sum = h;
        }
    }
    std::mt19937_64 rng(stream_seed(seed, 5, kind == Baseline::Greedy ? 0 : 1));
    std::vector<EpochMetrics> out;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        env.reset(stream_seed(env_config.seed, 4, static_cast<std::uint64_t>(epoch)));
        double total = 0.0;
        long count = 0;
        env::StepResult last;
        for (int t = 0; t < env_config.episode_len; ++t) {
            std::vector<double> actions(static_cast<std::size_t>(agents));
            for (int n = 0; n < agents; ++n) {
                actions[static_cast<std::size_t>(n)] =
                    kind == Baseline::Greedy
                        ? greedy_policy(env.observations()[static_cast<std::size_t>(n)], know[static_cast<std::size_t>(n)],
                                        env_config.price_floor, env_config.price_ceiling)
                        : random_policy(rng, env_config.price_floor, env_config.price_ceiling);
            }
            last = env.step(actions);
            for (double r : last.rewards) total += r;
            count += agents;
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.mean_reward = total / static_cast<double>(count);
        m.test_reward = m.mean_reward;
        m.prices = last.prices;
        m.demands = last.demands;
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

void write_net(std::ostream& os, const char* name, const nn::MaskedNetwork& net) {
    os << "network " << name << ' ' << net.layers().size() << '\n';
    for (const auto& l : net.layers()) {
        os << "layer " << l.W.rows() << ' ' << l.W.cols() << ' ' << (l.act == kernels::Activation::Tanh ? "tanh" : "identity")
           << ' ' << (l.mask.size() ? 1 : 0) << '\n';
        if (l.mask.size()) {
            for (Eigen::Index j = 0; j < l.mask.size(); ++j) os << (l.mask[j] != 0.0 ? '1' : '0');
            os << '\n';
        }
        for (Eigen::Index j = 0; j < l.W.rows(); ++j) {
            for (Eigen::Index k = 0; k < l.W.cols(); ++k) os << l.W(j, k) << (k + 1 == l.W.cols() ? '\n' : ' ');
        }
        for (Eigen::Index j = 0; j < l.b.size(); ++j) os << l.b[j] << (j + 1 == l.b.size() ? '\n' : ' ');
    }
}

template <typename T>
T read(std::istream& is, const char* what) {
    T v{};
    if (!(is >> v)) throw Error(ErrorKind::Io, std::string("checkpoint: expected ") + what);
    return v;
}

void expect(std::istream& is, const std::string& word) {
    const auto got = read<std::string>(is, word.c_str());
    if (got != word) throw Error(ErrorKind::Io, "checkpoint: expected '" + word + "', got '" + got + "'");
}

nn::MaskedNetwork read_net(std::istream& is, nn::MaskedNetwork net) {
    expect(is, "network");
    read<std::string>(is, "network name");
    const auto count = read<std::size_t>(is, "layer count");
    auto& layers = net.layers();
    layers.assign(count, nn::Layer{});
    for (auto& l : layers) {
        expect(is, "layer");
        const auto rows = read<Eigen::Index>(is, "rows");
        const auto cols = read<Eigen::Index>(is, "cols");
        const auto act = read<std::string>(is, "activation");
        const auto has_mask = read<int>(is, "mask flag");
        l.act = act == "tanh" ? kernels::Activation::Tanh : kernels::Activation::Identity;
        if (has_mask) {
            const auto bits = read<std::string>(is, "mask bits");
            if (static_cast<Eigen::Index>(bits.size()) != rows) throw Error(ErrorKind::Io, "checkpoint: mask length");
            l.mask.resize(rows);
            for (Eigen::Index j = 0; j < rows; ++j) l.mask[j] = bits[static_cast<std::size_t>(j)] == '1' ? 1.0 : 0.0;
        }
        l.W.resize(rows, cols);
        for (Eigen::Index j = 0; j < rows; ++j)
            for (Eigen::Index k = 0; k < cols; ++k) l.W(j, k) = read<double>(is, "weight");
        l.b.resize(rows);
        for (Eigen::Index j = 0; j < rows; ++j) l.b[j] = read<double>(is, "bias");
    }
    return net;
}

}  // namespace

void save_checkpoint(std::ostream& os, const TrainResult& result, int epoch) {
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    os << "laesim-checkpoint 1\n";
    os << "epoch " << epoch << '\n';
    os << "agents " << result.policy_of_agent.size();
    for (int p : result.policy_of_agent) os << ' ' << p;
    os << '\n';
    os << "policies " << result.policies.size() << '\n';
    for (const auto& ac : result.policies) {
        os << "policy " << ac.log_std << ' ' << ac.price_floor << ' ' << ac.price_ceiling << '\n';
        write_net(os, "actor", ac.actor);
        write_net(os, "critic", ac.critic);
    }
    os.precision(old_precision);
}

TrainResult load_checkpoint(std::istream& is) {
    expect(is, "laesim-checkpoint");
    if (read<int>(is, "version") != 1) throw Error(ErrorKind::Io, "checkpoint: unsupported version");
    expect(is, "epoch");
    read<int>(is, "epoch");
    TrainResult r;
    expect(is, "agents");
    const auto agents = read<std::size_t>(is, "agent count");
    for (std::size_t n = 0; n < agents; ++n) r.policy_of_agent.push_back(read<int>(is, "policy index"));
    expect(is, "policies");
    const auto count = read<std::size_t>(is, "policy count");
    for (std::size_t p = 0; p < count; ++p) {
        expect(is, "policy");
        ActorCritic ac;
        ac.log_std = read<double>(is, "log_std");
        ac.price_floor = read<double>(is, "price floor");
        ac.price_ceiling = read<double>(is, "price ceiling");
        ac.actor = read_net(is, {});
        ac.critic = read_net(is, {});
        r.policies.push_back(std::move(ac));
    }
    return r;
}

}  // namespace lae::ppo
