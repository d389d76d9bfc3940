// Scriptable victim process for wire tests. Usage: echo_victim <mode>
//   edges   scores [1/(1+m), m/(1+m)] with m the edge count
//   logits  logits [0, m]
//   error   every request gets an error reply
//   badid   replies carry the wrong id
//   silent  reads requests and never answers
//   garbage answers with a line that is not JSON

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "grabnel/wire.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "edges";
  if (mode == "edges" || mode == "logits" || mode == "error") {
    grabnel::serve_stdio([&](const grabnel::Graph& g) -> std::vector<double> {
      const auto m = static_cast<double>(g.num_edges());
      if (mode == "error") throw std::runtime_error("scripted failure");
      if (mode == "logits") return {0.0, m};
      return {1.0 / (1.0 + m), m / (1.0 + m)};
    });
    return 0;
  }
  std::string line;
  while (std::getline(std::cin, line)) {
    if (mode == "silent") {
      std::this_thread::sleep_for(std::chrono::seconds(5));
      continue;
    }
    if (mode == "garbage") {
      std::cout << "not json\n" << std::flush;
      continue;
    }
    const auto req = nlohmann::json::parse(line);
    nlohmann::json reply;
    reply["id"] = req["id"].get<long long>() + 1;
    reply["scores"] = {0.5, 0.5};
    std::cout << reply.dump() << '\n' << std::flush;
  }
  return 0;
}
