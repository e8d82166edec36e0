// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include "dgen_cli/commands.hpp"

namespace {

void add_data_flags(CLI::App* cmd, dgen::cli::DataOptions& data) {
    cmd->add_option("--dataset", data.dataset_dir,
                    "Dataset directory (manifest.json + DGT1 payloads)");
    cmd->add_option("--synthetic-spec", data.synthetic_spec,
                    "Synthetic benchmark spec: inline JSON or a path to a JSON file");
}

void add_train_flags(CLI::App* cmd, dgen::TrainConfig& train) {
    cmd->add_option("--lr", train.learning_rate, "Learning rate");
    cmd->add_option("--batch-size", train.batch_size, "Batch size per domain");
    cmd->add_option("--iters", train.max_iterations, "Training iterations");
    cmd->add_option("--momentum", train.momentum, "SGD momentum");
    cmd->add_option("--val-fraction", train.val_fraction,
                    "Per-domain validation fraction");
    cmd->add_option("--weight-decay", train.weight_decay, "L2 penalty");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain generalization via low-rank domain-conditioned weight "
                 "generation: train on source domains, extract an agnostic model, "
                 "evaluate zero-shot on held-out domains"};
    app.require_subcommand(1);

    dgen::cli::TrainOptions train_opt;
    CLI::App* train = app.add_subcommand("train", "Train one mode, write report + checkpoint");
    add_data_flags(train, train_opt.data);
    train->add_option("--held-out", train_opt.held_out, "Domain excluded from training")
        ->required();
    train->add_option("--mode", train_opt.mode,
                      "deep_all | tuning_last | two_hot_last | two_hot_decomp_last | full");
    train->add_option("--epsilon", train_opt.epsilon, "Rank-selection budget");
    train->add_option("--hidden", train_opt.hidden, "Hidden width");
    train->add_option("--seed", train_opt.train.seed, "Seed for all randomness");
    train->add_option("--out", train_opt.out_dir, "Output directory")->required();
    add_train_flags(train, train_opt.train);
    auto* rho_opt = train->add_option("--rho", train_opt.train.rho,
                                      "Domain-entry weight of the 2-hot encoding");

    dgen::cli::EvalOptions eval_opt;
    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one domain");
    add_data_flags(eval, eval_opt.data);
    eval->add_option("--checkpoint", eval_opt.checkpoint_dir, "Checkpoint directory")
        ->required();
    eval->add_option("--domain", eval_opt.domain, "Domain name to score")->required();
    eval->add_option("--seed", eval_opt.data.seed, "Seed (for synthetic datasets)");
    eval->add_option("--out", eval_opt.out_dir, "Output directory")->required();

    dgen::cli::ShiftOptions shift_opt;
    CLI::App* shift = app.add_subcommand("shift", "Domain-shift report over held-out choices");
    add_data_flags(shift, shift_opt.data);
    shift->add_option("--features", shift_opt.feature_source, "raw | penultimate");
    shift->add_option("--checkpoint", shift_opt.checkpoint_dir,
                      "Checkpoint for penultimate features");
    shift->add_option("--seed", shift_opt.data.seed, "Seed (for synthetic datasets)");
    shift->add_option("--out", shift_opt.out_dir, "Output directory")->required();

    dgen::cli::DecomposeOptions dec_opt;
    CLI::App* dec = app.add_subcommand("decompose", "Per-layer rank report for a checkpoint");
    dec->add_option("--checkpoint", dec_opt.checkpoint_dir, "Checkpoint directory")
        ->required();
    dec->add_option("--epsilon", dec_opt.epsilon, "Reconstruction error budget");
    dec->add_option("--out", dec_opt.out_dir, "Output directory")->required();

    dgen::cli::AblateOptions abl_opt;
    CLI::App* abl = app.add_subcommand("ablate",
                                       "All five modes x all held-out choices");
    add_data_flags(abl, abl_opt.data);
    abl->add_option("--epsilon", abl_opt.epsilon, "Rank-selection budget");
    abl->add_option("--hidden", abl_opt.hidden, "Hidden width");
    abl->add_option("--seed", abl_opt.train.seed, "Seed for all randomness");
    abl->add_option("--out", abl_opt.out_dir, "Output directory")->required();
    add_train_flags(abl, abl_opt.train);
    abl->add_option("--rho", abl_opt.train.rho, "Domain-entry weight");

    dgen::cli::SynthOptions synth_opt;
    CLI::App* synth = app.add_subcommand("synth", "Write a synthetic dataset to disk");
    synth->add_option("--synthetic-spec", synth_opt.synthetic_spec,
                      "Inline JSON or a path to a JSON file")
        ->required();
    synth->add_option("--seed", synth_opt.seed, "Seed when the spec omits one");
    synth->add_option("--out", synth_opt.out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    train_opt.data.seed = train_opt.train.seed;
    abl_opt.data.seed = abl_opt.train.seed;
    train_opt.rho_explicit = rho_opt->count() > 0;

    return dgen::cli::run_with_exit_codes([&]() -> int {
        if (train->parsed()) return dgen::cli::cmd_train(train_opt);
        if (eval->parsed()) return dgen::cli::cmd_eval(eval_opt);
        if (shift->parsed()) return dgen::cli::cmd_shift(shift_opt);
        if (dec->parsed()) return dgen::cli::cmd_decompose(dec_opt);
        if (abl->parsed()) return dgen::cli::cmd_ablate(abl_opt);
        if (synth->parsed()) return dgen::cli::cmd_synth(synth_opt);
        return 2;
    });
}
