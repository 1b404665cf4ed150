"""Bytecode decoding: instructions, basic blocks, and input file handling."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .opcodes import Control, info_for_byte, info_for_name

MAX_CODE_SIZE = 24576


class BytecodeError(ValueError):
    """Raised for inputs that cannot be decoded into a program."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class Terminator(Enum):
    JUMP = "jump"
    CONDITIONAL_JUMP = "conditional-jump"
    HALT = "halt"
    FALLTHROUGH = "fallthrough"


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction.

    pushed_value is present exactly for the PUSH family; truncated immediates
    at the end of code are zero-padded on the right.
    """

    pc: int
    opcode: str
    pushed_value: int | None = None
    stack_pops: int = 0
    stack_pushes: int = 0

    @property
    def size(self) -> int:
        return info_for_name(self.opcode).size

    @property
    def is_push(self) -> bool:
        return self.pushed_value is not None


@dataclass(frozen=True)
class BasicBlock:
    """Maximal straight-line instruction run; id is the pc of its first instruction."""

    id: int
    instructions: tuple[Instruction, ...]
    terminator: Terminator

    @property
    def last(self) -> Instruction:
        return self.instructions[-1]

    @property
    def fallthrough_pc(self) -> int:
        return self.last.pc + self.last.size


@dataclass(frozen=True)
class BytecodeProgram:
    """A decoded contract: code bytes, block map, and jump-target bookkeeping.

    clone_of maps synthetic block ids (introduced by block cloning) to the
    original block they copy; it is empty for freshly decoded programs.
    """

    code: bytes
    blocks: dict[int, BasicBlock]
    jumpdests: frozenset[int]
    clone_of: dict[int, int] = field(default_factory=dict)

    @property
    def jump_target_ids(self) -> frozenset[int]:
        """Block ids a JUMP may legally land on: jumpdests plus jumpdest-headed clones."""
        extra = {
            fresh
            for fresh in self.clone_of
            if self.blocks[fresh].instructions[0].opcode == "JUMPDEST"
        }
        return self.jumpdests | frozenset(extra)

    def block_ids(self) -> list[int]:
        return sorted(self.blocks)


def valid_jumpdests(code: bytes) -> frozenset[int]:
    """Offsets holding a 0x5b byte that is not inside PUSH immediate data."""
    dests = set()
    pc = 0
    while pc < len(code):
        byte = code[pc]
        if byte == 0x5B:
            dests.add(pc)
        pc += info_for_byte(byte).size
    return frozenset(dests)


def disassemble(code: bytes) -> list[Instruction]:
    """Decode every byte; total on arbitrary input."""
    if len(code) > MAX_CODE_SIZE:
        raise BytecodeError(f"code is {len(code)} bytes, above the {MAX_CODE_SIZE}-byte deployment limit")
    out: list[Instruction] = []
    pc = 0
    while pc < len(code):
        info = info_for_byte(code[pc])
        value = None
        if info.is_push:
            raw = code[pc + 1 : pc + 1 + info.push_width]
            # zero-pad pushes whose immediate runs off the end of the code
            raw = raw.ljust(info.push_width, b"\x00")
            value = int.from_bytes(raw, "big")
        out.append(Instruction(pc, info.mnemonic, value, info.pops, info.pushes))
        pc += info.size
    return out


def extract_blocks(code: bytes) -> BytecodeProgram:
    """Partition the instruction stream into basic blocks.

    A block starts at pc 0, at every JUMPDEST, and after every JUMP, JUMPI, or
    halting instruction.
    """
    instructions = disassemble(code)
    jumpdests = valid_jumpdests(code)
    starts: set[int] = set(jumpdests)
    if instructions:
        starts.add(0)
    for ins in instructions:
        info = info_for_name(ins.opcode)
        if info.control in (Control.JUMP, Control.JUMPI, Control.HALT):
            after = ins.pc + ins.size
            if after < len(code):
                starts.add(after)

    blocks: dict[int, BasicBlock] = {}
    ordered = sorted(starts)
    by_pc = {ins.pc: i for i, ins in enumerate(instructions)}
    for i, start in enumerate(ordered):
        end = ordered[i + 1] if i + 1 < len(ordered) else len(code)
        body: list[Instruction] = []
        idx = by_pc[start]
        while idx < len(instructions) and instructions[idx].pc < end:
            body.append(instructions[idx])
            idx += 1
        last = body[-1]
        control = info_for_name(last.opcode).control
        if control is Control.JUMP:
            term = Terminator.JUMP
        elif control is Control.JUMPI:
            term = Terminator.CONDITIONAL_JUMP
        elif control is Control.HALT:
            term = Terminator.HALT
        else:
            term = Terminator.FALLTHROUGH
        blocks[start] = BasicBlock(start, tuple(body), term)
    return BytecodeProgram(code, blocks, jumpdests)


_HEX_DIGITS = set("0123456789abcdefABCDEF")


def parse_bytecode_text(data: bytes) -> bytes | None:
    """Interpret file content as a hex string if it looks like one.

    Returns the decoded bytes, or None when the content should be treated as
    raw binary bytecode. Raises BytecodeError (with the first bad character's
    file offset) for content with explicit hex intent that fails to parse.
    """
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError:
        return None

    digits: list[tuple[int, str]] = [(i, ch) for i, ch in enumerate(text) if not ch.isspace()]
    if not digits:
        return b""

    forced = False
    if len(digits) >= 2 and digits[0][1] == "0" and digits[1][1] in "xX":
        forced = True
        digits = digits[2:]

    first_bad = next(((i, ch) for i, ch in digits if ch not in _HEX_DIGITS), None)
    if first_bad is not None:
        if forced:
            raise BytecodeError(
                f"malformed hex input: bad character {first_bad[1]!r} at offset {first_bad[0]}",
                offset=first_bad[0],
            )
        return None
    if len(digits) % 2 != 0:
        raise BytecodeError(
            f"malformed hex input: dangling hex digit at offset {digits[-1][0]}",
            offset=digits[-1][0],
        )
    return bytes.fromhex("".join(ch for _, ch in digits))


def read_bytecode_file(path: str | Path) -> bytes:
    """Load a contract from a file holding either hex text or raw binary code."""
    data = Path(path).read_bytes()
    decoded = parse_bytecode_text(data)
    return data if decoded is None else decoded
