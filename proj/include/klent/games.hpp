#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace klent::games {

enum class GameKind { countup, hex, othello };

const char* to_string(GameKind kind);
GameKind game_kind_from_string(const std::string& name);

// Which game to play plus its size parameters. The action space is fixed
// and finite once the spec is known.
struct GameSpec {
  GameKind kind = GameKind::countup;
  int countup_target = 7;    // N: reaching >= N wins
  int countup_increment = 2; // k: add 1..k per move
  int board_side = 0;        // hex / othello side length

  static GameSpec countup(int target, int max_increment);
  static GameSpec hex(int side);
  static GameSpec othello(int side);

  int action_count() const;   // countup: k; hex: side^2; othello: side^2 + pass
  int feature_count() const;  // length of encode() output
  int default_max_ply() const;
  void validate() const;      // throws std::invalid_argument on bad params

  bool operator==(const GameSpec&) const = default;
};

// Boolean legality vector plus the equivalent sparse index list.
struct LegalMask {
  std::vector<uint8_t> bits;
  std::vector<int> legal;  // ascending indices of set bits

  static LegalMask from_bits(std::vector<uint8_t> bits);
  bool is_legal(int action) const {
    return action >= 0 && action < static_cast<int>(bits.size()) && bits[static_cast<size_t>(action)] != 0;
  }
  int count() const { return static_cast<int>(legal.size()); }
  bool operator==(const LegalMask&) const = default;
};

// Canonical position. `outcome` is from the perspective of the player who
// just moved and is meaningful only when `terminal` is true.
struct GameState {
  GameSpec spec;
  std::vector<int8_t> cells;  // boards: 0 empty, 1 player0, 2 player1
  int counter = 0;            // countup position
  int to_move = 0;
  bool terminal = false;
  int outcome = 0;
  int pass_streak = 0;  // othello: consecutive passes

  bool operator==(const GameState&) const = default;
};

GameState reset(const GameSpec& spec);

// Applies a legal action. Reward is in {-1, 0, +1} from the mover's
// perspective and is nonzero only when the returned state is terminal.
std::pair<GameState, int> step(const GameState& state, int action);

LegalMask legal_actions(const GameState& state);  // throws on terminal states

// Fixed-length numeric features. countup: one-hot position 0..N-1 plus a
// player-0-to-move bit; boards: player-0 plane, player-1 plane, to-move plane.
std::vector<double> encode(const GameState& state);

// Injective over reachable states of a spec, stable across runs.
std::string state_key(const GameState& state);

std::string render(const GameState& state);

// Human-readable action name ("+2", "b3", "pass").
std::string action_name(const GameSpec& spec, int action);
// Parses what action_name produces; returns -1 if unparseable.
int parse_action(const GameSpec& spec, const std::string& text);

}  // namespace klent::games
