#ifndef SSNMF_TOOLS_COMMANDS_HPP
#define SSNMF_TOOLS_COMMANDS_HPP

namespace ssnmf::cli {

/// Exit codes: 0 success, 1 usage error, 2 data error.
int run(int argc, char** argv);

}  // namespace ssnmf::cli

#endif  // SSNMF_TOOLS_COMMANDS_HPP
