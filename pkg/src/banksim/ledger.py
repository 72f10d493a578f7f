"""Double-entry bookkeeping core.

Every monetary event in the simulator is a posting: one debit target and
one credit target for the same positive integer amount, applied to two
ledgers of a single bank's general ledger.  Asset ledgers are
debit-normal (a debit increases the balance), liability and capital
ledgers are credit-normal.  Because both legs of a posting land on the
same bank's books, the accounting equation

    assets = liabilities + capital

is preserved by construction; the implementation still re-checks it with
integer arithmetic after every posting and refuses any posting that
would break it or drive an account negative.

Amounts are integer minor currency units throughout.  No floating point
is ever stored.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, NamedTuple


class LedgerError(Exception):
    """Base class for bookkeeping failures."""


class UnknownTarget(LedgerError):
    """Posting references a bank, ledger, or account that does not exist."""


class NonPositiveAmount(LedgerError):
    """Posting amounts must be strictly positive."""


class WouldOverdraw(LedgerError):
    """Applying the posting would push an account balance below zero.

    Callers treat this as an illiquidity signal, not a crash: the posting
    is refused with no state change.
    """


class CrossFormTransfer(LedgerError):
    """Direct transfer attempted between ledgers of different normal forms."""


class UnbalancedPosting(LedgerError):
    """Posting would violate the accounting equation (e.g. spans two banks)."""


class CorruptLog(LedgerError):
    """Audit log failed structural validation (sequence gap, bad header)."""


class Form(enum.IntEnum):
    ASSET = 0
    LIABILITY = 1
    CAPITAL = 2


_FORM_NAMES = {f.name.lower(): f for f in Form}

Target = tuple[str, str, str]  # (bank, ledger, account)


class Posting(NamedTuple):
    seq: int
    step: int
    debit: Target
    credit: Target
    amount: int
    memo: str


class Ledger:
    """A named collection of accounts sharing one normal form.

    ``deposit_class`` marks ledgers whose totals count toward the
    reserve-requirement deposit base; customer deposit ledgers carry it
    by default while income-type ledgers do not, and configuration may
    override either way.
    """

    __slots__ = ("name", "form", "deposit_class", "accounts", "total")

    def __init__(self, name: str, form: Form, deposit_class: bool = False) -> None:
        self.name = name
        self.form = form
        self.deposit_class = deposit_class
        self.accounts: dict[str, int] = {}
        self.total = 0


@dataclass(frozen=True)
class BalanceReport:
    bank: str
    assets: int
    liabilities: int
    capital: int

    @property
    def ok(self) -> bool:
        return self.assets == self.liabilities + self.capital


class GeneralLedger:
    """One bank's complete set of ledgers plus running form totals."""

    __slots__ = ("bank", "ledgers", "form_totals")

    def __init__(self, bank: str) -> None:
        self.bank = bank
        self.ledgers: dict[str, Ledger] = {}
        # running [assets, liabilities, capital]; mirrors account balances
        self.form_totals = [0, 0, 0]

    def add_ledger(self, name: str, form: Form, deposit_class: bool = False) -> Ledger:
        if name in self.ledgers:
            raise ValueError(f"ledger exists: {self.bank}/{name}")
        ledger = Ledger(name, form, deposit_class)
        self.ledgers[name] = ledger
        return ledger

    def add_account(self, ledger: str, account: str) -> None:
        led = self.ledgers.get(ledger)
        if led is None:
            raise UnknownTarget(f"no ledger {self.bank}/{ledger}")
        if account in led.accounts:
            raise ValueError(f"account exists: {self.bank}/{ledger}/{account}")
        led.accounts[account] = 0

    def has_account(self, ledger: str, account: str) -> bool:
        led = self.ledgers.get(ledger)
        return led is not None and account in led.accounts

    def balance(self, ledger: str, account: str) -> int:
        led = self.ledgers.get(ledger)
        if led is None or account not in led.accounts:
            raise UnknownTarget(f"no account {self.bank}/{ledger}/{account}")
        return led.accounts[account]

    def ledger_total(self, name: str) -> int:
        led = self.ledgers.get(name)
        if led is None:
            raise UnknownTarget(f"no ledger {self.bank}/{name}")
        return led.total

    def deposit_class_total(self) -> int:
        return sum(l.total for l in self.ledgers.values() if l.deposit_class)

    @property
    def assets_total(self) -> int:
        return self.form_totals[Form.ASSET]

    @property
    def liabilities_total(self) -> int:
        return self.form_totals[Form.LIABILITY]

    @property
    def capital_total(self) -> int:
        return self.form_totals[Form.CAPITAL]


def verify_equation(book: GeneralLedger) -> BalanceReport:
    """Recompute form totals from raw account balances and report.

    Authoritative check: sums every account rather than trusting the
    incrementally maintained totals, and raises if the two disagree
    (which would indicate ledger corruption, not a caller error).
    """
    sums = [0, 0, 0]
    for ledger in book.ledgers.values():
        acct_sum = sum(ledger.accounts.values())
        if acct_sum != ledger.total:
            raise UnbalancedPosting(
                f"ledger total drift on {book.bank}/{ledger.name}: "
                f"{ledger.total} != {acct_sum}"
            )
        sums[ledger.form] += acct_sum
    if sums != book.form_totals:
        raise UnbalancedPosting(f"form total drift on {book.bank}")
    return BalanceReport(book.bank, sums[0], sums[1], sums[2])


AUDIT_MAGIC = "#banksim-audit v1"


class AuditWriter:
    """Streams postings to a line-delimited audit log.

    Layout: a magic line, one ``#ledger`` line per ledger describing the
    chart of accounts (bank, ledger, form, deposit-class flag), an
    ``#end-chart`` marker, then one CSV record per posting:

        seq,step,debit bank,debit ledger,debit account,
        credit bank,credit ledger,credit account,amount,memo

    Field order is stable so golden-file comparisons are meaningful.
    Memos must not contain commas or newlines.
    """

    def __init__(self, out: IO[str], books: Iterable[GeneralLedger]) -> None:
        self._out = out
        out.write(AUDIT_MAGIC + "\n")
        for book in books:
            for ledger in book.ledgers.values():
                out.write(
                    f"#ledger,{book.bank},{ledger.name},"
                    f"{ledger.form.name.lower()},{int(ledger.deposit_class)}\n"
                )
        out.write("#end-chart\n")

    def write_posting(self, p: Posting) -> None:
        memo = p.memo
        if "," in memo or "\n" in memo:
            raise ValueError(f"memo not serializable: {memo!r}")
        d, c = p.debit, p.credit
        self._out.write(
            f"{p.seq},{p.step},{d[0]},{d[1]},{d[2]},{c[0]},{c[1]},{c[2]},{p.amount},{memo}\n"
        )

    def flush(self) -> None:
        self._out.flush()


class AccountingSystem:
    """All banks' general ledgers plus the posting engine and audit trail.

    Single-writer: the simulation step loop is the only mutator.  ``step``
    is stamped onto postings by the engine before each simulation step.
    """

    def __init__(self) -> None:
        self.books: dict[str, GeneralLedger] = {}
        self.seq = 0
        self.step = 0
        self._sink: AuditWriter | None = None
        self._chart_frozen = False

    def add_book(self, bank: str) -> GeneralLedger:
        if bank in self.books:
            raise ValueError(f"book exists: {bank}")
        if self._chart_frozen:
            raise RuntimeError("audit chart already written; cannot add books")
        book = GeneralLedger(bank)
        self.books[bank] = book
        return book

    def book(self, bank: str) -> GeneralLedger:
        try:
            return self.books[bank]
        except KeyError:
            raise UnknownTarget(f"no bank {bank}") from None

    def attach_audit(self, out: IO[str]) -> AuditWriter:
        """Start auditing.  Must be called before any posting so that a
        replay from the log reproduces every balance from empty ledgers."""
        if self.seq != 0:
            raise RuntimeError("audit must be attached before the first posting")
        self._sink = AuditWriter(out, self.books.values())
        self._chart_frozen = True
        return self._sink

    # -- posting primitives -------------------------------------------------

    def post(self, debit: Target, credit: Target, amount: int, memo: str = "") -> Posting:
        """Apply one atomic double-entry posting.

        Debit and credit must name existing accounts of the same bank.
        Validation happens before any mutation, so a refused posting
        leaves no trace.
        """
        if amount <= 0:
            raise NonPositiveAmount(f"amount {amount} for memo {memo!r}")
        dbank, dledger, dacct = debit
        cbank, cledger, cacct = credit
        if dbank != cbank:
            raise UnbalancedPosting(
                f"posting spans banks {dbank}/{cbank}; cross-bank flows must be "
                "composed of per-bank postings plus a central-bank settlement"
            )
        book = self.books.get(dbank)
        if book is None:
            raise UnknownTarget(f"no bank {dbank}")
        ledgers = book.ledgers
        dl = ledgers.get(dledger)
        cl = ledgers.get(cledger)
        if dl is None or dacct not in dl.accounts:
            raise UnknownTarget(f"no account {dbank}/{dledger}/{dacct}")
        if cl is None or cacct not in cl.accounts:
            raise UnknownTarget(f"no account {cbank}/{cledger}/{cacct}")

        # debit increases debit-normal (asset) ledgers, decreases the rest;
        # credit is the mirror image
        if dl.form == 0:
            d_delta = amount
        else:
            if dl.accounts[dacct] < amount:
                raise WouldOverdraw(
                    f"debit {dbank}/{dledger}/{dacct} balance "
                    f"{dl.accounts[dacct]} < {amount} ({memo})"
                )
            d_delta = -amount
        if cl.form == 0:
            if cl.accounts[cacct] < amount:
                raise WouldOverdraw(
                    f"credit {cbank}/{cledger}/{cacct} balance "
                    f"{cl.accounts[cacct]} < {amount} ({memo})"
                )
            c_delta = -amount
        else:
            c_delta = amount

        dl.accounts[dacct] += d_delta
        dl.total += d_delta
        cl.accounts[cacct] += c_delta
        cl.total += c_delta
        totals = book.form_totals
        totals[dl.form] += d_delta
        totals[cl.form] += c_delta
        if totals[0] != totals[1] + totals[2]:
            raise UnbalancedPosting(f"accounting equation broken on {dbank} ({memo})")

        posting = Posting(self.seq, self.step, debit, credit, amount, memo)
        self.seq += 1
        if self._sink is not None:
            self._sink.write_posting(posting)
        return posting

    def deposit_cash(self, bank: str, ledger: str, account: str, amount: int,
                     memo: str = "cash.deposit") -> Posting:
        """Cash arrives from outside the bank: debit the vault, credit a
        credit-normal (deposit or capital) account."""
        book = self.book(bank)
        led = book.ledgers.get(ledger)
        if led is None or account not in led.accounts:
            raise UnknownTarget(f"no account {bank}/{ledger}/{account}")
        if led.form == Form.ASSET:
            raise CrossFormTransfer(f"cash deposit target {ledger} is debit-normal")
        return self.post((bank, "cash", "vault"), (bank, ledger, account), amount, memo)

    def transfer_intra(self, bank: str, from_target: tuple[str, str],
                       to_target: tuple[str, str], amount: int,
                       memo: str = "transfer") -> Posting:
        """Move value between two liability accounts of the same bank.

        This is the only single-posting transfer customers can make;
        anything touching an asset ledger must be composed from explicit
        postings (e.g. a cash withdrawal), so mixed-form arguments are
        refused.
        """
        book = self.book(bank)
        fl = book.ledgers.get(from_target[0])
        tl = book.ledgers.get(to_target[0])
        if fl is None or tl is None:
            raise UnknownTarget(f"no ledger on {bank}: {from_target[0]}/{to_target[0]}")
        if fl.form != Form.LIABILITY or tl.form != Form.LIABILITY:
            raise CrossFormTransfer(
                f"direct transfer requires liability ledgers, got "
                f"{fl.form.name}/{tl.form.name}"
            )
        return self.post((bank,) + from_target, (bank,) + to_target, amount, memo)

    # -- queries -------------------------------------------------------------

    def balance(self, bank: str, ledger: str, account: str) -> int:
        return self.book(bank).balance(ledger, account)

    def ledger_total(self, bank: str, ledger: str) -> int:
        return self.book(bank).ledger_total(ledger)

    def verify_all(self) -> list[BalanceReport]:
        return [verify_equation(b) for b in self.books.values()]

    def cash_total(self) -> int:
        """System-wide vault cash; constant except for explicit creation."""
        return sum(
            l.total for b in self.books.values()
            for l in b.ledgers.values() if l.name == "cash"
        )


def replay(lines: Iterable[str] | Iterator[str]) -> AccountingSystem:
    """Reconstruct an AccountingSystem from an audit log.

    Accounts are created lazily on first use (their creation is not a
    monetary event and is not logged); ledgers come from the chart
    header.  Raises CorruptLog on any structural defect, including a
    non-contiguous sequence.
    """
    it = iter(lines)
    try:
        magic = next(it).rstrip("\n")
    except StopIteration:
        raise CorruptLog("empty log") from None
    if magic != AUDIT_MAGIC:
        raise CorruptLog(f"bad magic line: {magic!r}")

    system = AccountingSystem()
    in_chart = True
    expected_seq = 0
    for raw in it:
        line = raw.rstrip("\n")
        if not line:
            continue
        if in_chart:
            if line == "#end-chart":
                in_chart = False
                continue
            if not line.startswith("#ledger,"):
                raise CorruptLog(f"unexpected chart line: {line!r}")
            _, bank, name, form_name, dep = line.split(",")
            form = _FORM_NAMES.get(form_name)
            if form is None:
                raise CorruptLog(f"unknown ledger form: {form_name!r}")
            if bank not in system.books:
                system.add_book(bank)
            system.books[bank].add_ledger(name, form, deposit_class=dep == "1")
            continue
        parts = line.split(",")
        if len(parts) != 10:
            raise CorruptLog(f"malformed record: {line!r}")
        seq = int(parts[0])
        if seq != expected_seq:
            raise CorruptLog(f"sequence gap: expected {expected_seq}, got {seq}")
        expected_seq += 1
        step = int(parts[1])
        debit = (parts[2], parts[3], parts[4])
        credit = (parts[5], parts[6], parts[7])
        amount = int(parts[8])
        memo = parts[9]
        for bank, ledger, account in (debit, credit):
            book = system.books.get(bank)
            if book is None:
                raise CorruptLog(f"record references unknown bank {bank}")
            led = book.ledgers.get(ledger)
            if led is None:
                raise CorruptLog(f"record references unknown ledger {bank}/{ledger}")
            if account not in led.accounts:
                led.accounts[account] = 0
        system.step = step
        system.post(debit, credit, amount, memo)
    if in_chart:
        raise CorruptLog("missing #end-chart marker")
    return system
