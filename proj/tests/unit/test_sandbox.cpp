/*
 * Copyright 2026 The Hallu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <chrono>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "hallu/error.hpp"
#include "hallu/tools.hpp"
#include "support.hpp"

using namespace hallu;
using namespace std::chrono_literals;

namespace {

SubprocessSandbox& sandbox() {
  static SubprocessSandbox box([] {
    SandboxOptions o;
    o.wall_clock = 3000ms;
    o.memory_limit_bytes = std::size_t{256} << 20;
    o.max_concurrent = 4;
    return o;
  }());
  return box;
}

bool have_python() { return !find_executable("python3").empty(); }

}  // namespace

TEST_SUITE("sandbox") {
  TEST_CASE("prints are returned as the observation") {
    REQUIRE(have_python());
    auto r = sandbox().execute("print(1+1)");
    CHECK(r.ok);
    CHECK(r.content == "2");
    CHECK(sandbox().execute("x = 1").content == "(no output)");
  }

  TEST_CASE("site packages are unavailable") {
    auto r = sandbox().execute("import wikipedia\nprint(wikipedia.summary('kelp'))");
    CHECK_FALSE(r.ok);
    CHECK(r.error_kind == ToolErrorKind::execution_error);
    CHECK(r.content.find("No module named 'wikipedia'") != std::string::npos);
  }

  TEST_CASE("the standard library still works") {
    auto r = sandbox().execute("import math, json, fractions\nprint(json.dumps([math.factorial(5), str(fractions.Fraction(3, 6))]))");
    CHECK(r.content == "[120, \"1/2\"]");
  }

  TEST_CASE("tracebacks point at the user's code only") {
    auto r = sandbox().execute("def f():\n    return 1 / 0\nf()");
    CHECK_FALSE(r.ok);
    CHECK(r.content.find("ZeroDivisionError") != std::string::npos);
    CHECK(r.content.find("main.py") != std::string::npos);
    CHECK(r.content.find("_hook") == std::string::npos);
    CHECK(r.content.find("<string>") == std::string::npos);
  }

  TEST_CASE("runaway code hits the wall clock") {
    auto start = std::chrono::steady_clock::now();
    auto r = sandbox().execute("while True:\n    pass");
    auto took = std::chrono::steady_clock::now() - start;
    CHECK(r.error_kind == ToolErrorKind::timeout);
    CHECK(r.content == "Execution timed out after 3000 ms");
    CHECK(took < 8s);
  }

  TEST_CASE("children that sleep past the deadline are killed") {
    auto start = std::chrono::steady_clock::now();
    auto r = sandbox().execute("import time\nprint('started', flush=True)\ntime.sleep(60)");
    CHECK(r.error_kind == ToolErrorKind::timeout);
    CHECK(std::chrono::steady_clock::now() - start < 8s);
  }

  TEST_CASE("files outside the work directory cannot be read") {
    test::TempDir dir;
    auto canary = dir.path() / "canary.txt";
    test::write_file(canary, "CANARY-7f3a");
    auto r = sandbox().execute("print(open(" + json(canary.string()).dump() + ").read())");
    CHECK_FALSE(r.ok);
    CHECK(r.content.find("CANARY-7f3a") == std::string::npos);
    CHECK(r.content.find("not permitted") != std::string::npos);

    auto etc = sandbox().execute("print(open('/etc/passwd').read())");
    CHECK_FALSE(etc.ok);
    CHECK(etc.content.find("root:") == std::string::npos);

    auto listing = sandbox().execute("import os\nprint(os.listdir('/'))");
    CHECK_FALSE(listing.ok);
  }

  TEST_CASE("files outside the work directory cannot be written") {
    test::TempDir dir;
    auto target = dir.path() / "escape.txt";
    auto r = sandbox().execute("open(" + json(target.string()).dump() + ", 'w').write('x')");
    CHECK_FALSE(r.ok);
    CHECK_FALSE(std::filesystem::exists(target));

    auto low = sandbox().execute("import os\nfd = os.open(" + json(target.string()).dump() +
                                 ", os.O_WRONLY | os.O_CREAT)\nos.write(fd, b'x')");
    CHECK_FALSE(low.ok);
    CHECK_FALSE(std::filesystem::exists(target));
  }

  TEST_CASE("the work directory is writable and private") {
    auto r = sandbox().execute("open('scratch.txt', 'w').write('hello')\nprint(open('scratch.txt').read())");
    CHECK(r.content == "hello");
    auto again = sandbox().execute("import os\nprint(os.path.exists('scratch.txt'))");
    CHECK(again.content == "False");
  }

  TEST_CASE("network and process creation are blocked") {
    auto sock = sandbox().execute("import socket\ns = socket.socket()\ns.connect(('127.0.0.1', 9))");
    CHECK_FALSE(sock.ok);
    CHECK(sock.content.find("not permitted") != std::string::npos);

    auto sub = sandbox().execute("import subprocess\nprint(subprocess.run(['sh', '-c', 'echo $((6*7))'], capture_output=True).stdout)");
    CHECK_FALSE(sub.ok);
    CHECK(sub.content.find("not permitted") != std::string::npos);
    CHECK(sub.content.find("42") == std::string::npos);

    auto sys_call = sandbox().execute("import os\nos.system('echo $((6*9))')");
    CHECK_FALSE(sys_call.ok);
    CHECK(sys_call.content.find("not permitted") != std::string::npos);
    CHECK(sys_call.content.find("54") == std::string::npos);

    auto ct = sandbox().execute("import ctypes\nprint(ctypes.CDLL(None))");
    CHECK_FALSE(ct.ok);
  }

  TEST_CASE("memory is capped") {
    auto r = sandbox().execute("x = bytearray(2 * 1024 * 1024 * 1024)\nprint(len(x))");
    CHECK_FALSE(r.ok);
    CHECK(r.content.find("MemoryError") != std::string::npos);
  }

  TEST_CASE("output is capped") {
    SandboxOptions o;
    o.output_limit_bytes = 1000;
    SubprocessSandbox small(o);
    auto r = small.execute("print('x' * 100000)");
    CHECK(r.content.size() <= 1000);
  }

  TEST_CASE("concurrent executions are isolated") {
    std::vector<std::thread> threads;
    std::vector<ToolResult> results(6);
    for (int i = 0; i < 6; ++i) {
      threads.emplace_back([&, i] { results[i] = sandbox().execute("print(" + std::to_string(i) + " * 7)"); });
    }
    for (auto& t : threads) t.join();
    for (int i = 0; i < 6; ++i) CHECK(results[i].content == std::to_string(i * 7));
  }

  TEST_CASE("configuration errors") {
    SandboxOptions o;
    o.max_concurrent = 0;
    CHECK_THROWS_AS(SubprocessSandbox{o}, ConfigError);
    o.max_concurrent = 65;
    CHECK_THROWS_AS(SubprocessSandbox{o}, ConfigError);

    SandboxOptions missing;
    missing.interpreter = "python-does-not-exist-9";
    SubprocessSandbox none(missing);
    auto r = none.execute("print(1)");
    CHECK(r.error_kind == ToolErrorKind::execution_error);
    CHECK(find_executable("python-does-not-exist-9").empty());
    CHECK(sandbox().execute("").error_kind == ToolErrorKind::bad_arguments);
  }
}
