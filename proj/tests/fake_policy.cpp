// Stand-in external policy for protocol tests. The first argument picks a
// behaviour: good, garbage, version99, missing, silent, error, crash,
// slow-hello.

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

using json = nlohmann::json;

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "good";
  const char* actions[] = {"Stop", "Decelerate", "KeepSpeed", "Accelerate",
                           "TurnLeft", "TurnRight", "LaneChangeLeft", "LaneChangeRight"};
  std::string line;
  int decisions = 0;
  while (std::getline(std::cin, line)) {
    json msg = json::parse(line, nullptr, false);
    const std::string type = msg.is_object() ? msg.value("type", "") : "";
    if (type == "hello") {
      if (mode == "garbage") {
        std::cout << "hello there, not json" << std::endl;
      } else if (mode == "version99") {
        std::cout << R"({"type":"hello","version":"99"})" << std::endl;
      } else if (mode == "slow-hello") {
        std::this_thread::sleep_for(std::chrono::seconds(5));
      } else {
        std::cout << R"({"type":"hello","version":"1"})" << std::endl;
      }
    } else if (type == "decide") {
      if (mode == "silent") continue;
      if (mode == "crash") return 3;
      if (mode == "error") {
        std::cout << R"({"type":"error","reason":"model unavailable"})" << std::endl;
        continue;
      }
      ++decisions;
      const std::string prompt = msg.value("prompt_suffix", "");
      const bool cautious = prompt.find("stop or decelerate") != std::string::npos;
      json reply{{"type", "decision"}};
      json scores = json::object();
      for (const char* a : actions) scores[a] = 0.01;
      scores[cautious ? "Decelerate" : "KeepSpeed"] = 0.9;
      // echo history length through a score so tests can see it
      scores["TurnRight"] = 0.001 * static_cast<double>(msg["history"].size());
      if (mode == "missing") scores.erase("LaneChangeRight");
      reply["scores"] = scores;
      std::cout << reply.dump() << std::endl;
    } else if (type == "shutdown") {
      return 0;
    } else {
      std::cout << R"({"type":"error","reason":"malformed request"})" << std::endl;
    }
  }
  return 0;
}
