// arl: command-line front end for the rule engine.

#include <csignal>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "arl/commands.hpp"
#include "arl/service.hpp"

namespace {

const std::map<std::string, arl::RuleSource> kAlgorithms = {
    {"apriori", arl::RuleSource::apriori},
    {"maxminer", arl::RuleSource::maxminer},
    {"id3", arl::RuleSource::id3},
};

int serve(const std::string& store, const std::string& listen) {
  // Block termination signals in every thread; a dedicated waiter turns them
  // into an orderly shutdown.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::signal(SIGPIPE, SIG_IGN);

  try {
    arl::Service service(store);
    for (const auto& w : service.store()->warnings()) std::cerr << "warning: " << w << '\n';
    arl::Server server(service, listen);
    if (server.port() != 0) std::cout << "listening on tcp port " << server.port() << std::endl;
    else std::cout << "listening on " << listen << std::endl;
    std::thread waiter([&] {
      int received = 0;
      sigwait(&signals, &received);
      server.stop();
    });
    server.run();
    // run() only returns after stop(), which the waiter issues.
    waiter.join();
    return arl::kExitOk;
  } catch (const arl::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return e.code() == arl::errc::bind_failure ? arl::kExitEngine : arl::exit_status_for(e.code());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Association rule learning engine"};
  app.require_subcommand(1);

  std::string store, listen;
  auto* serve_cmd = app.add_subcommand("serve", "Run the rule engine daemon");
  serve_cmd->add_option("--store", store, "Store directory")->required();
  serve_cmd->add_option("--listen", listen, "unix:PATH, tcp:HOST:PORT or a socket path")->required();

  arl::MineOptions mine;
  auto* mine_cmd = app.add_subcommand("mine", "Mine rules from a data file");
  mine_cmd->add_option("--data", mine.data, "Data file (schema header + JSON rows)")->required();
  mine_cmd->add_option("--minsup", mine.min_support, "Minimum support in (0,1]")->required();
  mine_cmd->add_option("--minconf", mine.min_confidence, "Minimum confidence in (0,1]")->required();
  std::string mine_algo = "apriori";
  mine_cmd->add_option("--algo", mine_algo, "apriori, maxminer or id3")->check(CLI::IsMember(kAlgorithms));
  mine_cmd->add_flag("--stats", mine.stats, "Print mining counters");

  arl::ReplayOptions replay;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a sensor/action trace");
  replay_cmd->add_option("--trace", replay.trace, "Trace file")->required();
  replay_cmd->add_option("--bins", replay.bins, "Binning configuration")->required();
  replay_cmd->add_option("--minsup", replay.min_support, "Minimum support in (0,1]")->required();
  replay_cmd->add_option("--minconf", replay.min_confidence, "Minimum confidence in (0,1]")->required();
  std::string replay_algo = "apriori";
  replay_cmd->add_option("--algo", replay_algo, "apriori, maxminer or id3")->check(CLI::IsMember(kAlgorithms));
  replay_cmd->add_option("--every", replay.regenerate_every, "Regenerate rules every N rows (1 = automated)")
      ->check(CLI::PositiveNumber);
  replay_cmd->add_flag("--feedback", replay.feedback, "Send feedback on every prediction");

  arl::GenTraceOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-trace", "Generate a trace with planted patterns");
  gen_cmd->add_option("--spec", gen.spec, "Trace specification")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->required();
  gen_cmd->add_option("--len", gen.length, "Number of events")->required();
  gen_cmd->add_option("--out", gen.out, "Output trace file")->required();
  gen_cmd->add_option("--sidecar", gen.sidecar, "Ground-truth file (default <out>.sidecar.json)");

  arl::InspectOptions inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarise one application in a store");
  inspect_cmd->add_option("--store", inspect.store, "Store directory")->required();
  inspect_cmd->add_option("--app", inspect.app, "Application name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? arl::kExitOk : arl::kExitUsage;
  }

  mine.algorithm = kAlgorithms.at(mine_algo);
  replay.algorithm = kAlgorithms.at(replay_algo);

  if (serve_cmd->parsed()) return serve(store, listen);
  if (mine_cmd->parsed()) return arl::cmd_mine(mine, std::cout, std::cerr);
  if (replay_cmd->parsed()) return arl::cmd_replay(replay, std::cout, std::cerr);
  if (gen_cmd->parsed()) return arl::cmd_gen_trace(gen, std::cout, std::cerr);
  return arl::cmd_inspect(inspect, std::cout, std::cerr);
}
