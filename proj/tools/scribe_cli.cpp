// scribe: serve the API, export the store, report usage metrics, move
// templates in and out, verify the audit chain.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <pthread.h>

#include "scribe/api_server.hpp"
#include "scribe/config.hpp"
#include "scribe/export.hpp"
#include "scribe/metrics.hpp"
#include "scribe/store.hpp"

using namespace scribe;

namespace {

int run_serve(const std::string& config_path) {
  // Block SIGINT/SIGTERM before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto server = serve(load_config(config_path));
  std::cerr << "listening on " << server->config().listen_host << ":" << server->port() << "\n";
  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "shutting down, draining jobs\n";
  server->stop();
  return 0;
}

struct MetricsArgs {
  std::string period;
  std::string from;
  std::string to;
  bool csv = false;
  std::optional<double> server_cost;
  double token_cost_per_1k = 0.0;
  double storage_cost_per_gb = 0.0;
  std::optional<double> storage_gb;
};

int run_metrics(const Store& store, const MetricsArgs& a) {
  const MetricsSnapshot snap = snapshot_from(store);
  MonthRange range;
  if (!a.period.empty()) {
    const Month m = parse_month(a.period);
    range = {m, m};
  } else if (!a.from.empty() || !a.to.empty()) {
    if (a.from.empty() || a.to.empty()) throw Error(ErrorCode::ValidationFailed, "--from and --to go together");
    range = {parse_month(a.from), parse_month(a.to)};
    if (range.size() < 1) throw Error(ErrorCode::ValidationFailed, "--to precedes --from");
  } else {
    const Month now = Month::of(now_utc());
    range = covering_range(snap).value_or(MonthRange{now, now});
  }
  const UsageMetrics m = aggregate(range, snap);
  const auto series = monthly_series(range, snap);

  if (a.csv) {
    std::cout << "month,session_count\n";
    for (const auto& mc : series) std::cout << to_string(mc.month) << "," << mc.session_count << "\n";
    return 0;
  }

  std::uint64_t storage_bytes = 0;
  for (const auto& b : store.list_blobs()) storage_bytes += b.size_bytes;
  const double storage_gb = a.storage_gb.value_or(static_cast<double>(storage_bytes) / 1e9);

  std::printf("period                       %s .. %s\n", to_string(range.first).c_str(), to_string(range.last).c_str());
  std::printf("sessions                     %lld\n", static_cast<long long>(m.session_count));
  std::printf("unique users                 %lld\n", static_cast<long long>(m.unique_users));
  std::printf("unique facilities            %lld\n", static_cast<long long>(m.unique_facilities));
  std::printf("total audio                  %.1f h (%.0f s)\n", m.total_audio_s / 3600.0, m.total_audio_s);
  std::printf("mean audio per session       %.1f s\n", m.mean_session_audio_s);
  std::printf("prompt tokens                %lld\n", static_cast<long long>(m.total_prompt_tokens));
  std::printf("completion tokens            %lld\n", static_cast<long long>(m.total_completion_tokens));
  std::printf("users with custom templates  %lld\n", static_cast<long long>(m.users_with_custom_templates));
  std::printf("customization rate           %.4f\n", m.customization_rate);
  std::printf("stored audio                 %.3f GB\n", static_cast<double>(storage_bytes) / 1e9);
  if (a.server_cost) {
    const CostModel model{*a.server_cost, a.token_cost_per_1k, a.storage_cost_per_gb};
    if (m.unique_users > 0) {
      std::printf("cost per physician-month     $%.2f\n", cost_per_physician_month(m, model, storage_gb));
    } else {
      std::printf("cost per physician-month     n/a (no users)\n");
    }
  }
  std::printf("\n%-8s  %s\n", "month", "sessions");
  for (const auto& mc : series) {
    std::printf("%-8s  %lld\n", to_string(mc.month).c_str(), static_cast<long long>(mc.session_count));
  }
  return 0;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path);
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::ValidationFailed, path + " is not valid JSON");
  return doc;
}

int run_import(const ApiConfig& config, const std::string& owner, const std::string& file) {
  Store store(config.storage_root);
  AsrRegistry asr;
  LlmRegistry llm;
  OrchestratorConfig oc;
  oc.dispatch_jobs = false;
  Orchestrator orch(store, asr, llm, oc);
  orch.ensure_user(owner, owner);
  for (auto& t : parse_template_document(read_json_file(file))) {
    const auto created = orch.create_template(owner, std::move(t));
    std::cout << created.id << "  " << created.name << "\n";
  }
  return 0;
}

void print_error(const Error& e) {
  std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
  for (const auto& v : e.violations()) std::cerr << "  " << v.field << ": " << v.code << " (" << v.message << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-hosted ambient clinical scribe service"};
  app.require_subcommand(1);
  std::string config_path = "scribe.json";

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--config", config_path, "Configuration file")->required();

  std::string out = "-";
  auto* export_cmd = app.add_subcommand("export", "Write entities, audit log and blob manifest as one JSON archive");
  export_cmd->add_option("--config", config_path, "Configuration file")->required();
  export_cmd->add_option("-o,--out", out, "Output file, - for stdout");

  MetricsArgs margs;
  auto* metrics_cmd = app.add_subcommand("metrics", "Usage metrics table, or the monthly series as CSV");
  metrics_cmd->add_option("--config", config_path, "Configuration file")->required();
  metrics_cmd->add_option("--period", margs.period, "Single month, YYYY-MM");
  metrics_cmd->add_option("--from", margs.from, "First month, YYYY-MM");
  metrics_cmd->add_option("--to", margs.to, "Last month, YYYY-MM");
  metrics_cmd->add_flag("--csv", margs.csv, "Emit the monthly series as CSV");
  metrics_cmd->add_option("--server-cost", margs.server_cost, "Server cost per month");
  metrics_cmd->add_option("--token-cost-per-1k", margs.token_cost_per_1k, "Price per 1000 tokens");
  metrics_cmd->add_option("--storage-cost-per-gb", margs.storage_cost_per_gb, "Storage price per GB-month");
  metrics_cmd->add_option("--storage-gb", margs.storage_gb, "Stored GB (default: measured blob bytes)");

  auto* templates_cmd = app.add_subcommand("templates", "Import or export custom templates");
  templates_cmd->require_subcommand(1);
  std::string owner;
  std::string file;
  auto* t_export = templates_cmd->add_subcommand("export", "Write custom templates as JSON");
  t_export->add_option("--config", config_path, "Configuration file")->required();
  t_export->add_option("--owner", owner, "Only this user's templates");
  t_export->add_option("-o,--out", out, "Output file, - for stdout");
  auto* t_import = templates_cmd->add_subcommand("import", "Create custom templates from a JSON file");
  t_import->add_option("--config", config_path, "Configuration file")->required();
  t_import->add_option("--owner", owner, "Owning user id")->required();
  t_import->add_option("file", file, "Template JSON")->required();

  auto* verify_cmd = app.add_subcommand("verify", "Verify the audit hash chain");
  verify_cmd->add_option("--config", config_path, "Configuration file")->required();

  std::string key;
  std::string subject;
  std::optional<std::int64_t> exp_s;
  auto* token_cmd = app.add_subcommand("token", "Mint an oidc_stub bearer token for development");
  token_cmd->add_option("--key", key, "HS256 shared key")->required();
  token_cmd->add_option("--sub", subject, "Subject (user id)")->required();
  token_cmd->add_option("--exp", exp_s, "Expiry, seconds since epoch");
  bool admin = false;
  token_cmd->add_flag("--admin", admin, "Assert the admin role");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return run_serve(config_path);
    if (*token_cmd) {
      std::cout << make_stub_token(subject, key, exp_s, std::nullopt,
                                   admin ? std::optional<Role>(Role::admin) : std::nullopt)
                << "\n";
      return 0;
    }
    const ApiConfig config = load_config(config_path);
    if (*export_cmd) {
      Store store(config.storage_root);
      write_export(store, out);
      return 0;
    }
    if (*metrics_cmd) {
      Store store(config.storage_root);
      return run_metrics(store, margs);
    }
    if (*verify_cmd) {
      Store store(config.storage_root);
      const auto verdict = store.verify_audit_chain();
      if (verdict.ok) {
        std::cout << "ok: " << store.audit_log().size() << " events\n";
        return 0;
      }
      std::cout << "broken at seq " << verdict.broken_at << "\n";
      return 2;
    }
    if (*t_export) {
      Store store(config.storage_root);
      const auto doc = export_templates(store, owner.empty() ? std::nullopt : std::optional<std::string>(owner));
      if (out == "-") {
        std::cout << doc.dump(2) << "\n";
      } else {
        std::ofstream(out) << doc.dump(2) << "\n";
      }
      return 0;
    }
    if (*t_import) return run_import(config, owner, file);
  } catch (const Error& e) {
    print_error(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
