#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sshpb.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Photon blockade in an SSH qubit chain coupled to a driven cavity"};
  app.set_version_flag("--version", std::string(sshpb::kVersion));

  std::string command, config_path, out_path;
  unsigned workers = 0;
  std::optional<bool> validate_regime;

  std::vector<std::string> names;
  for (const auto& [name, _] : sshpb::command_names()) names.push_back(name);
  app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_path, "Output path (overrides output.path)");
  app.add_option("--workers", workers, "Maximum worker threads (default: all cores)");
  app.add_flag("--validate-regime,!--no-validate-regime", validate_regime, "Check the coupling-regime inequalities");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sshpb::kExitConfig;
  }

  sshpb::RunConfig cfg;
  try {
    const std::string text = sshpb::read_text_file(config_path);
    cfg = sshpb::parse_config(text, sshpb::parse_command(command));
    if (validate_regime && *validate_regime != cfg.validate_regime) {
      // Re-resolve so that the warnings and the echoed document agree with the flag.
      auto doc = sshpb::Json::parse(sshpb::echo_config(cfg));
      doc["validate_regime"] = *validate_regime;
      cfg = sshpb::parse_config(doc.dump());
    }
    if (!out_path.empty()) {
      auto doc = sshpb::Json::parse(sshpb::echo_config(cfg));
      doc["output"]["path"] = out_path;
      if (out_path.ends_with(".json")) doc["output"]["format"] = "json";
      if (out_path.ends_with(".csv")) doc["output"]["format"] = "csv";
      cfg = sshpb::parse_config(doc.dump());
    }
  } catch (const sshpb::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sshpb::kExitIo;
  } catch (const sshpb::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sshpb::kExitConfig;
  }
  return sshpb::run(cfg, {workers, &std::cout, &std::cerr});
}
