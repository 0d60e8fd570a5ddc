#pragma once

// Clipped-surrogate actor-critic training for the per-UAV pricing agents, with
// dynamic structured pruning of hidden neurons, plus the greedy and random
// pricing baselines used for comparison.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lae/env.hpp"
#include "lae/error.hpp"
#include "lae/network.hpp"

namespace lae::ppo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class OptimizerKind { Sgd, Adam };

enum class ThresholdMode {
    Quantile,    // phi = score at the (1 - density) quantile of the layer
    MeanScaled,  // phi = sum(scores) * (1 - density) / J
    Raw,         // phi = sum(scores) * density
};

struct PruneSchedule {
    bool enabled = true;
    double w_init = 1.0;    // density when pruning starts
    double w_target = 0.3;  // density after prune_steps events
    int start_epoch = 50;
    int prune_steps = 10;
    int frequency = 10;     // epochs between pruning events
    ThresholdMode threshold = ThresholdMode::Quantile;
    bool literal_schedule = false;  // w1 + (w1 - w2)(1 - progress)^3

    void validate() const;
};

struct TrainConfig {
    int epochs = 500;
    int steps_per_epoch = 200;
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    double gamma = 0.95;
    double gae_lambda = 0.95;
    double clip = 0.2;
    int minibatch = 32;
    int update_epochs = 10;
    std::vector<int> hidden{256, 256};
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double init_log_std = 0.0;
    double max_grad_norm = 0.0;  // 0 disables clipping
    bool shared_weights = false;
    std::uint64_t seed = 0;
    PruneSchedule prune;

    void validate() const;
};

/// Gaussian pricing policy and value function for one agent.
struct ActorCritic {
    nn::MaskedNetwork actor;   // outputs the pre-squash mean
    nn::MaskedNetwork critic;  // outputs V(s)
    double log_std = 0.0;
    double price_floor = 0.1;
    double price_ceiling = 5.0;

    ActorCritic() = default;
    ActorCritic(int obs_dim, const std::vector<int>& hidden, double init_log_std, double price_floor,
                double price_ceiling, std::mt19937_64& rng);
};

struct PolicyOutput {
    Vec mean;   // squashed into [price_floor, price_ceiling]
    Vec pre;    // pre-squash actor output
    double log_std = 0;
    Vec value;
};

PolicyOutput forward_masked(const ActorCritic& ac, const Mat& obs);

double log_prob(double action, double mean, double log_std);

/// Advantage estimates. `dones[t]` marks the last step of an episode; the
/// bootstrap value is used only when the final step is not terminal.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        std::span<const bool> dones, double bootstrap_value, double gamma, double lambda);

struct Batch {
    Mat obs;       // obs_dim x B
    Vec actions;
    Vec old_logp;
    Vec advantages;
    Vec returns;
};

struct ActorLoss {
    double loss = 0;
    nn::MaskedNetwork::Gradient grad;
    double d_log_std = 0;
    double clip_fraction = 0;
};

/// -mean(min(r A, clip(r) A)) with A normalised over the batch.
ActorLoss ppo_actor_loss(const Batch& batch, const ActorCritic& ac, double clip);

struct CriticLoss {
    double loss = 0;
    nn::MaskedNetwork::Gradient grad;
};

/// mean((V(s) - return)^2).
CriticLoss critic_loss(const Batch& batch, const ActorCritic& ac);

class Optimizer {
public:
    Optimizer(OptimizerKind kind, const ActorCritic& ac);

    void step(ActorCritic& ac, const ActorLoss& actor, const CriticLoss& critic, double actor_lr,
              double critic_lr, double max_grad_norm);

private:
    struct Moments {
        std::vector<Mat> mW, vW;
        std::vector<Vec> mb, vb;
    };
    void adam(nn::MaskedNetwork& net, const nn::MaskedNetwork::Gradient& g, Moments& m, double lr, double scale);

    OptimizerKind kind_;
    Moments actor_, critic_;
    double m_std_ = 0, v_std_ = 0;
    long t_ = 0;
};

struct UpdateStats {
    double actor_loss = 0;
    double critic_loss = 0;
};

/// One gradient step on actor and critic; masked parameters stay zero.
UpdateStats update(ActorCritic& ac, const Batch& batch, const TrainConfig& config, Optimizer& opt);

double sparsity_schedule(int epoch, const PruneSchedule& schedule);

/// L1 norm of each neuron's incoming weights plus |bias|.
Vec neuron_importance(const nn::MaskedNetwork& net, std::size_t layer);

double prune_threshold(std::span<const double> scores, double density, ThresholdMode mode);

/// Sets mask_j = 0 where importance_j < phi (masks never re-grow) and zeroes
/// the pruned parameters. Throws LayerCollapse, leaving the net unchanged,
/// when no neuron would survive. Returns the number of newly pruned neurons.
std::size_t apply_pruning(nn::MaskedNetwork& net, std::size_t layer, double phi);

struct PruneEvent {
    int epoch = 0;
    double density = 1.0;
    std::vector<std::string> skipped;  // layers that would have collapsed
};

/// Prunes every hidden layer of actor and critic to `density`.
PruneEvent prune_all(ActorCritic& ac, double density, ThresholdMode mode, int epoch);

struct EpochMetrics {
    int epoch = 0;
    double mean_reward = 0;   // stochastic rollout, per agent-step
    double test_reward = 0;   // deterministic policy, per agent-step
    double actor_loss = 0;
    double critic_loss = 0;
    double density = 1.0;     // actor hidden-neuron density (mean over policies)
    double critic_density = 1.0;
    double seconds = 0;
    std::vector<double> prices;   // deterministic price per agent at the end of the test episode
    std::vector<double> demands;
};

struct TrainResult {
    std::vector<ActorCritic> policies;
    std::vector<int> policy_of_agent;
    std::vector<EpochMetrics> metrics;
    std::vector<PruneEvent> prune_events;
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, std::vector<EpochMetrics> stable)
        : Error(ErrorKind::TrainingDiverged, what), stable_(std::move(stable)) {}
    const std::vector<EpochMetrics>& stable_metrics() const { return stable_; }

private:
    std::vector<EpochMetrics> stable_;
};

TrainResult train(const env::EnvConfig& env_config, const TrainConfig& config);

/// Mean per-agent-step reward of one deterministic episode.
double evaluate(const env::EnvConfig& env_config, const TrainResult& result, std::vector<double>* prices = nullptr,
                std::vector<double>* demands = nullptr);

struct GreedyKnowledge {
    double unit_cost = 0;
    double capacity = 0;
    std::optional<double> inv_eff_sum;  // H_n when the UAV knows its users' channels
};

/// Myopic one-step price: fits demand = Theta/price - H_n to the newest window
/// entry and maximises the predicted margin on a 100-point grid. Falls back to
/// the interval midpoint when no demand has been observed.
double greedy_policy(const env::Observation& obs, const GreedyKnowledge& knowledge, double price_floor,
                     double price_ceiling);

double random_policy(std::mt19937_64& rng, double price_floor, double price_ceiling);

enum class Baseline { Greedy, Random };

/// Per-epoch mean per-agent-step reward of a baseline over `epochs` episodes.
std::vector<EpochMetrics> run_baseline(const env::EnvConfig& env_config, Baseline kind, int epochs,
                                       std::uint64_t seed, bool greedy_knows_channels = false);

void save_checkpoint(std::ostream& os, const TrainResult& result, int epoch);
TrainResult load_checkpoint(std::istream& is);

}  // namespace lae::ppo
