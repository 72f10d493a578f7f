"""Simulation engine: configuration loading, world construction, the
step loop, time series, and parameter sweeps.

A step runs a fixed phase order so identical configurations replay to
identical posting streams:

1. scheduled / steered parameter changes
2. government: treasury issues, coupons, redemptions
3. interbank repayments, then salaries, then dividends
4. borrower payments (global id order)
5. arrears and hazard defaults
6. loan requests (global id order)
7. investor reinvestment
8. snapshot and full balance verification
"""

from __future__ import annotations

import copy
import csv
import itertools
import json
from importlib import resources
from pathlib import Path

import jsonschema

from .agents import (
    Borrower,
    Government,
    Investor,
    Saver,
    reinvest_deposit_as_capital,
    validate_population,
)
from .bank import Bank, BankPolicy, Denial
from .clearing import (
    CentralBank,
    SettlementFailure,
    repay_interbank,
    sweep_cash_to_reserves,
)
from .instruments import Instrument, Status
from .ledger import AccountingSystem, LedgerError, UnbalancedPosting
from .rng import Xoshiro256StarStar, derive_subseed


class ConfigError(Exception):
    pass


class SchemaError(ConfigError):
    """Configuration rejected; ``path`` points at the offending key."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}")


class InvalidParamPath(Exception):
    """Steering/schedule parameter path or value not accepted."""


class InvariantViolation(Exception):
    """A book stopped balancing; carries the audit position."""


_INSTRUMENTS = {
    "compound": Instrument.COMPOUND,
    "simple": Instrument.SIMPLE,
    "indexed": Instrument.INDEXED,
}

# steerable parameters: whole-run knobs and per-bank policy knobs
GLOBAL_PARAMS = {"base_rate", "default_rate"}
BANK_PARAMS = {"reserve_requirement", "capital_requirement", "dividend_rate"}


def _schema() -> dict:
    text = resources.files("banksim.schemas").joinpath("config.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = jsonschema.Draft202012Validator(_schema())


def validate_param_path(path: str, bank_names: list[str]) -> tuple[str, str]:
    """Split a parameter path into (bank scope, name); '' scope = global.

    Raises InvalidParamPath for unknown names, unknown banks, or a
    global-only parameter used with a bank scope.
    """
    scope, _, name = path.rpartition(".")
    if name in GLOBAL_PARAMS:
        if scope:
            raise InvalidParamPath(f"{name} cannot be bank-scoped ({path})")
        return "", name
    if name in BANK_PARAMS:
        if scope and scope not in bank_names:
            raise InvalidParamPath(f"unknown bank {scope!r} in {path}")
        return scope, name
    raise InvalidParamPath(f"unknown parameter {name!r} in {path}")


def _check_param_value(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise InvalidParamPath(f"{name} value must be an integer, got {value!r}")
    if value < 0:
        raise InvalidParamPath(f"{name} must be non-negative, got {value}")
    if name != "base_rate" and value > 1000:
        raise InvalidParamPath(f"{name} is per-mil, got {value}")
    if name in ("reserve_requirement", "capital_requirement") and value == 0:
        raise InvalidParamPath(f"{name} of 0 would make the ratio undefined")


def load_config(source: dict | str | Path) -> dict:
    """Parse, schema-validate, and cross-check a run configuration.

    Returns the raw dict (amounts still in whole units); raises
    SchemaError with a json path on the first defect found.
    """
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text())
        except FileNotFoundError:
            raise SchemaError("$", f"no such config file: {source}")
        except json.JSONDecodeError as e:
            raise SchemaError("$", f"not valid JSON: {e}")
    else:
        raw = copy.deepcopy(source)
    errors = sorted(_VALIDATOR.iter_errors(raw),
                    key=lambda e: (len(e.absolute_path), str(e.absolute_path)))
    if errors:
        e = errors[0]
        raise SchemaError(e.json_path, e.message)

    banks = raw.get("banks", [])
    if not banks:
        raise SchemaError("$.banks", "at least one bank is required")
    names = [b["name"] for b in banks]
    if len(set(names)) != len(names):
        raise SchemaError("$.banks", f"duplicate bank names in {names}")
    if "central" in names:
        raise SchemaError("$.banks", "'central' is reserved for the central bank")
    for i, bank in enumerate(banks):
        if bank.get("reserve_control") and bank.get("reserve_requirement_permil", 100) == 0:
            raise SchemaError(f"$.banks[{i}].reserve_requirement_permil",
                              "reserve control enabled with a zero requirement")
        if bank.get("capital_control") and bank.get("capital_requirement_permil", 80) == 0:
            raise SchemaError(f"$.banks[{i}].capital_requirement_permil",
                              "capital control enabled with a zero requirement")

    agents = raw.get("agents", {})
    for i, group in enumerate(agents.get("borrowers", [])):
        for key in ("bank", "lender", "employer"):
            ref = group.get(key, group.get("bank") if key != "bank" else None)
            if key == "bank":
                ref = group["bank"]
            if ref is not None and ref not in names:
                raise SchemaError(f"$.agents.borrowers[{i}].{key}",
                                  f"unknown bank {ref!r}")
    for kind in ("savers", "investors"):
        for i, group in enumerate(agents.get(kind, [])):
            if group["bank"] not in names:
                raise SchemaError(f"$.agents.{kind}[{i}].bank",
                                  f"unknown bank {group['bank']!r}")
    for i, bond in enumerate(raw.get("government", {}).get("treasuries", [])):
        if bond["bank"] not in names:
            raise SchemaError(f"$.government.treasuries[{i}].bank",
                              f"unknown bank {bond['bank']!r}")
    for i, entry in enumerate(raw.get("event_schedule", [])):
        try:
            _, name = validate_param_path(entry["path"], names)
            _check_param_value(name, entry["value"])
        except InvalidParamPath as e:
            raise SchemaError(f"$.event_schedule[{i}].path", str(e))
    return raw


def list_experiments() -> list[str]:
    """Names of the scenario configs shipped inside the package."""
    folder = resources.files("banksim.experiments")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def experiment_config(name: str) -> dict:
    """Load a packaged scenario config by bare name (no path, no .json)."""
    ref = resources.files("banksim.experiments").joinpath(f"{name}.json")
    try:
        text = ref.read_text()
    except FileNotFoundError:
        known = ", ".join(list_experiments())
        raise SchemaError("$", f"no packaged scenario {name!r} (have: {known})")
    return json.loads(text)


class World:
    """One simulated economy: books, banks, agents, and the clock."""

    def __init__(self, config: dict | str | Path, audit_sink=None) -> None:
        self.config = load_config(config)
        cfg = self.config
        unit = cfg.get("money_unit", 100)
        self.money_unit = unit
        self.total_steps = cfg.get("steps", 120)
        self.default_rate_permil = cfg.get("default_rate_permil", 0)
        self.rng = Xoshiro256StarStar(cfg["seed"])
        self.index_series = {int(k): v for k, v in cfg.get("index_series", {}).items()}

        self.system = AccountingSystem()
        self.step = 0
        self.events: list[dict] = []
        self.series: list[dict] = []
        self.settlements: dict[tuple[str, str], int] = {}
        self.interbank_loans: list = []
        self.tax_total = 0
        self._insolvency_flagged: set[str] = set()
        self._schedule: dict[int, list[tuple[str, str, int]]] = {}

        base_rate = cfg.get("country", {}).get("central_bank", {}).get("base_rate_bp", 200)
        self.cb = CentralBank(self.system, base_rate_bp=base_rate)
        self.cb.on_settle = self._note_settlement

        self.banks: dict[str, Bank] = {}
        for spec in cfg["banks"]:
            policy = BankPolicy(
                reserve_control=spec.get("reserve_control", False),
                reserve_requirement_permil=spec.get("reserve_requirement_permil", 100),
                capital_control=spec.get("capital_control", False),
                capital_requirement_permil=spec.get("capital_requirement_permil", 80),
                risk_weight_permil=spec.get("risk_weight_permil", 500),
                loss_provision_permil=spec.get("loss_provision_permil", 0),
                dividend_permil=spec.get("dividend_permil", 50),
                dividend_stride=spec.get("dividend_stride", 12),
            )
            bank = Bank(self.system, self.cb, spec["name"], policy,
                        spec.get("ledger_overrides"))
            self.banks[bank.name] = bank
        for bank in self.banks.values():
            bank.peers = self.banks
            bank.interbank_loans = self.interbank_loans

        # all books exist and nothing has posted yet: the audit chart is
        # complete and a replay starts from genuinely empty ledgers
        if audit_sink is not None:
            self.system.attach_audit(audit_sink)

        gov_cfg = cfg.get("government", {})
        self.government = Government(tax_permil=gov_cfg.get("tax_permil", 0))
        if gov_cfg.get("initial_deposit", 0):
            self.cb.government_deposit(gov_cfg["initial_deposit"] * unit, "init.gov")

        self.borrowers: list[Borrower] = []
        self.savers: list[Saver] = []
        self.investors: list[Investor] = []
        agents = cfg.get("agents", {})
        for group in agents.get("borrowers", []):
            bank = group["bank"]
            lender = group.get("lender", bank)
            employer = group.get("employer", lender)
            for _ in range(group["count"]):
                num = len(self.borrowers)
                self.borrowers.append(Borrower(
                    num=num, id=f"B{num}", bank_of_account=bank,
                    lender_bank=lender, employer_bank=employer,
                    principal=group.get("principal", 0) * unit,
                    periods=group.get("periods", 120),
                    window=group.get("window", 1),
                    instrument=_INSTRUMENTS[group.get("instrument", "compound")],
                    risk_weight_permil=group.get("risk_weight_permil", 500),
                    sizing=group.get("sizing", "fixed"),
                    reborrow=group.get("reborrow", True),
                ))
        for group in agents.get("savers", []):
            for _ in range(group["count"]):
                num = len(self.savers)
                self.savers.append(Saver(num, f"S{num}", group["bank"],
                                         group["endowment"] * unit))
        for group in agents.get("investors", []):
            for _ in range(group["count"]):
                num = len(self.investors)
                self.investors.append(Investor(
                    num=num, id=f"I{num}", bank=group["bank"],
                    endowment=group["endowment"] * unit,
                    reinvest=group.get("reinvest", False),
                    reinvest_stride=group.get("reinvest_stride", 12),
                ))

        # initial endowments arrive as vault cash, then everything sweeps
        # into reserve accounts so settlement can work from step 1
        for saver in self.savers:
            self.banks[saver.bank].book.add_account("deposits", saver.id)
            self.system.deposit_cash(saver.bank, "deposits", saver.id,
                                     saver.endowment, "init.saver")
        for borrower in self.borrowers:
            self.banks[borrower.bank_of_account].book.add_account(
                "deposits", borrower.account_id)
        offset = 0
        for group in agents.get("borrowers", []):
            deposit = group.get("initial_deposit", 0) * unit
            for i in range(group["count"]):
                if deposit:
                    borrower = self.borrowers[offset + i]
                    self.system.deposit_cash(borrower.bank_of_account, "deposits",
                                             borrower.account_id, deposit,
                                             "init.borrower")
            offset += group["count"]
        for investor in self.investors:
            bank = self.banks[investor.bank]
            bank.book.add_account("deposits", investor.account_id)
            bank.sell_shares(investor.id, investor.bank, investor.account_id,
                             investor.endowment, "init.shares")
        for borrower in self.borrowers:
            self.banks[borrower.employer_bank].employees.append(borrower)
        for bank in self.banks.values():
            vault = self.system.balance(bank.name, "cash", "vault")
            if vault:
                sweep_cash_to_reserves(self.system, self.cb, bank.name, vault,
                                       "init.sweep")

        self._scheduled_bonds: dict[int, list[dict]] = {}
        for bond in gov_cfg.get("treasuries", []):
            issue_step = bond.get("step", 0)
            entry = dict(bond, amount=bond["amount"] * unit)
            if issue_step == 0:
                self._issue_bond(entry)
            else:
                self._scheduled_bonds.setdefault(issue_step, []).append(entry)

        for entry in cfg.get("event_schedule", []):
            self._schedule.setdefault(entry["step"], []).append(
                (entry["path"], entry["value"], "schedule"))

        self.population_warnings = validate_population(self.borrowers)
        self.system.verify_all()
        self.series.append(self._snapshot_row())

    # -- wiring ---------------------------------------------------------------

    def _note_settlement(self, from_bank: str, to_bank: str, amount: int,
                         memo: str) -> None:
        key = (from_bank, to_bank)
        self.settlements[key] = self.settlements.get(key, 0) + amount

    def _event(self, kind: str, **fields) -> dict:
        event = {"step": self.step, "kind": kind, **fields}
        self.events.append(event)
        return event

    def factor_for(self, step: int) -> int:
        return self.index_series.get(step, 1000)

    def _issue_bond(self, entry: dict) -> None:
        bank = entry["bank"]
        if self.cb.reserve_balance(bank) < entry["amount"]:
            self._event("government_illiquid", bank=bank,
                        amount=entry["amount"], op="issue")
            return
        self.government.issue_treasury(
            self.system, self.cb, bank, entry["amount"],
            entry.get("rate_bp", self.cb.base_rate_bp),
            entry.get("periods", 120), self.step)

    # -- parameter steering -----------------------------------------------------

    def schedule_param(self, step: int, path: str, value: int,
                       source: str = "command") -> None:
        """Queue a parameter change for the start of ``step``; validates
        eagerly so a bad request fails at the caller."""
        scope, name = validate_param_path(path, list(self.banks))
        _check_param_value(name, value)
        if step <= self.step:
            raise InvalidParamPath(
                f"step {step} already ran (current step {self.step})")
        self._schedule.setdefault(step, []).append((path, value, source))

    def _set_param(self, path: str, value: int) -> None:
        scope, name = validate_param_path(path, list(self.banks))
        _check_param_value(name, value)
        targets = [self.banks[scope]] if scope else list(self.banks.values())
        if name == "base_rate":
            self.cb.set_base_rate(value)
        elif name == "default_rate":
            self.default_rate_permil = value
        elif name == "reserve_requirement":
            for bank in targets:
                bank.policy.reserve_requirement_permil = value
        elif name == "capital_requirement":
            for bank in targets:
                bank.policy.capital_requirement_permil = value
        elif name == "dividend_rate":
            for bank in targets:
                bank.policy.dividend_permil = value

    def _apply_scheduled(self) -> None:
        entries = self._schedule.pop(self.step, None)
        if not entries:
            return
        final: dict[str, tuple[int, str]] = {}
        for path, value, source in entries:  # last writer per path wins
            final[path] = (value, source)
        for path, (value, source) in final.items():
            self._set_param(path, value)
            self._event("param_change", path=path, value=value, source=source)

    # -- phases -----------------------------------------------------------------

    def _government_phase(self) -> None:
        for entry in self._scheduled_bonds.pop(self.step, []):
            self._issue_bond(entry)
        _, troubles = self.government.service_treasuries(
            self.system, self.cb, self.step)
        for item in troubles:
            _, bank, amount = item.split(":")
            self._event("government_illiquid", bank=bank, amount=int(amount),
                        op="service")

    def _interbank_phase(self) -> None:
        due = [loan for loan in self.interbank_loans if loan.due_step <= self.step]
        for loan in due:
            try:
                repay_interbank(self.system, self.cb, loan)
            except SettlementFailure as e:
                self._event("interbank_failed", lender=loan.lender,
                            borrower=loan.borrower, amount=loan.amount,
                            detail=str(e))
                continue
            self.interbank_loans.remove(loan)
            self._event("interbank_repaid", lender=loan.lender,
                        borrower=loan.borrower, amount=loan.amount,
                        interest=loan.interest)

    def _salary_phase(self) -> None:
        factor = self.factor_for(self.step)
        for bank in self.banks.values():
            paid, skipped = bank.pay_salaries(self.step, factor)
            for employee_id, reason in skipped:
                self._event("salary_skipped", bank=bank.name,
                            employee=employee_id, reason=reason)
            if self.government.tax_permil:
                for employee_id, amount in paid:
                    borrower = self._borrower_index[employee_id]
                    tax = self.government.collect_tax(
                        self.system, self.cb, borrower.bank_of_account,
                        borrower.account_id, amount, self.step, employee_id)
                    self.tax_total += tax

    def _dividend_phase(self) -> None:
        for bank in self.banks.values():
            if self.step % bank.policy.dividend_stride != 0:
                continue
            declared, results = bank.pay_dividends(self.step)
            if declared and not results:
                self._event("dividend_skipped", bank=bank.name, declared=declared)
            elif results:
                self._event("dividend_paid", bank=bank.name, declared=declared,
                            investors=len(results))

    def _payment_phase(self) -> None:
        factor = self.factor_for(self.step)
        for borrower in self.borrowers:
            record = borrower.current_loan
            if record is None or record.state.status is not Status.ACTIVE:
                continue
            if record.granted_step == self.step:
                continue
            lender = self.banks[borrower.lender_bank]
            outcome = lender.process_payment(record, self.step, factor)
            if not outcome.paid:
                self._event("missed_payment", borrower=borrower.id,
                            loan=record.loan_id, bank=lender.name,
                            reason=outcome.reason, due=outcome.amount,
                            streak=record.state.missed_streak)
            elif record.state.status is Status.REPAID:
                borrower.current_loan = None

    def _default_phase(self) -> None:
        for borrower in self.borrowers:
            record = borrower.current_loan
            if record is None or record.state.status is not Status.ACTIVE:
                continue
            reason = None
            if record.state.missed_streak >= 3:
                reason = "arrears"
            elif self.default_rate_permil and self.rng.bernoulli_permil(
                    self.default_rate_permil):
                reason = "hazard"
            if reason is None:
                continue
            lender = self.banks[borrower.lender_bank]
            outcome = lender.handle_default(record)
            borrower.defaulted = True
            borrower.current_loan = None
            self._event("default", borrower=borrower.id, bank=lender.name,
                        reason=reason, **{k: outcome[k] for k in
                                          ("loan", "outstanding", "residual")})
            if outcome["insolvent"] and lender.name not in self._insolvency_flagged:
                self._insolvency_flagged.add(lender.name)
                self._event("insolvency", bank=lender.name,
                            residual=lender.defaulted_residual)

    def _request_phase(self) -> None:
        for borrower in self.borrowers:
            if not borrower.wants_loan(self.step):
                continue
            lender = self.banks[borrower.lender_bank]
            size = borrower.request_size(lender)
            if size <= 0:
                continue
            terms = borrower.make_terms(self.cb.base_rate_bp, size)
            result = lender.grant_loan(borrower.id, borrower.bank_of_account,
                                       borrower.account_id, terms, self.step)
            if isinstance(result, Denial):
                self._event("denial", borrower=borrower.id, bank=lender.name,
                            constraint=result.reason, size=size)
                continue
            borrower.current_loan = result
            borrower.ever_borrowed = True
            self.new_lending[lender.name] += size
            self._event("grant", borrower=borrower.id, bank=lender.name,
                        loan=result.loan_id, size=size,
                        rate_bp=self.cb.base_rate_bp)

    def _investor_phase(self) -> None:
        for investor in self.investors:
            if not investor.reinvest_due(self.step):
                continue
            amount = reinvest_deposit_as_capital(
                self.system, self.cb, self.banks[investor.bank], investor,
                self.step)
            if amount:
                self._event("reinvest", investor=investor.id,
                            bank=investor.bank, amount=amount)

    # -- the step loop -------------------------------------------------------------

    def run_step(self) -> dict:
        self.step += 1
        self.system.step = self.step  # stamp every posting this step
        self.new_lending = {name: 0 for name in self.banks}
        self._apply_scheduled()
        self._government_phase()
        self._interbank_phase()
        self._salary_phase()
        self._dividend_phase()
        self._payment_phase()
        self._default_phase()
        self._request_phase()
        self._investor_phase()
        try:
            self.system.verify_all()
        except (UnbalancedPosting, LedgerError) as e:
            raise InvariantViolation(
                f"books unbalanced after step {self.step} "
                f"(audit position {self.system.seq}): {e}") from e
        row = self._snapshot_row()
        self.series.append(row)
        return row

    def run(self, steps: int | None = None) -> "World":
        target = self.total_steps if steps is None else steps
        while self.step < target:
            self.run_step()
        return self

    # -- observation -----------------------------------------------------------------

    @property
    def _borrower_index(self) -> dict[str, Borrower]:
        cached = getattr(self, "_borrower_index_cache", None)
        if cached is None or len(cached) != len(self.borrowers):
            cached = {b.id: b for b in self.borrowers}
            self._borrower_index_cache = cached
        return cached

    def _binding(self, bank: Bank) -> str:
        parts = []
        if bank.policy.reserve_control and bank.reserve_loan_capacity() <= 0:
            parts.append("reserve")
        if bank.policy.capital_control and bank.capital_loan_capacity() <= 0:
            parts.append("capital")
        return "+".join(parts)

    def _snapshot_row(self) -> dict:
        new_lending = getattr(self, "new_lending", None) or {n: 0 for n in self.banks}
        row = {"step": self.step, "base_rate_bp": self.cb.base_rate_bp}
        totals = {"narrow": 0, "broad": 0, "loans": 0, "new_lending": 0}
        for name, bank in self.banks.items():
            narrow = bank.deposit_base()
            broad = (bank.book.ledger_total("deposits")
                     + bank.book.ledger_total("interest_income")
                     + bank.book.ledger_total("loss_provision")
                     + bank.book.ledger_total("retained_earnings")
                     + bank.capital_total)
            loans = bank.book.ledger_total("loans")
            row[f"{name}_narrow"] = narrow
            row[f"{name}_broad"] = broad
            row[f"{name}_loans"] = loans
            row[f"{name}_new_lending"] = new_lending[name]
            row[f"{name}_reserves"] = bank.reserves
            row[f"{name}_capital"] = bank.capital_total
            row[f"{name}_binding"] = self._binding(bank)
            totals["narrow"] += narrow
            totals["broad"] += broad
            totals["loans"] += loans
            totals["new_lending"] += new_lending[name]
        for key, value in totals.items():
            row[f"system_{key}"] = value
        return row

    def csv_columns(self) -> list[str]:
        columns = ["step", "base_rate_bp"]
        for name in self.banks:
            columns += [f"{name}_{field}" for field in
                        ("narrow", "broad", "loans", "new_lending",
                         "reserves", "capital", "binding")]
        columns += ["system_narrow", "system_broad", "system_loans",
                    "system_new_lending"]
        return columns

    def export_series(self, fileobj) -> None:
        """Write the collected per-step series as CSV (integers in minor
        units; binding is '', 'reserve', 'capital', or 'reserve+capital')."""
        writer = csv.writer(fileobj, lineterminator="\n")
        columns = self.csv_columns()
        writer.writerow(columns)
        for row in self.series:
            writer.writerow([row[c] for c in columns])

    def state_summary(self) -> dict:
        return {
            "step": self.step,
            "total_steps": self.total_steps,
            "base_rate_bp": self.cb.base_rate_bp,
            "default_rate_permil": self.default_rate_permil,
            "government_balance": self.cb.government_balance(),
            "tax_total": self.tax_total,
            "banks": [
                dict(self.banks[name].balance_sheet(),
                     insolvent=self.banks[name].insolvent,
                     weighted_outstanding=self.banks[name].weighted_outstanding,
                     binding=self._binding(self.banks[name]),
                     loans_active=sum(
                         1 for r in self.banks[name].loan_book.values()
                         if r.state.status is Status.ACTIVE))
                for name in self.banks
            ],
            "agents": {
                "borrowers": len(self.borrowers),
                "savers": len(self.savers),
                "investors": len(self.investors),
                "defaulted": sum(1 for b in self.borrowers if b.defaulted),
            },
            "events": len(self.events),
            "postings": self.system.seq,
        }


def batch_run(config: dict, sweep: dict[str, list[int]],
              steps: int | None = None) -> list[dict]:
    """Run the cartesian product of parameter values.

    Every cell gets its own subseed derived from the base seed, so cells
    are independent but the whole batch replays deterministically.  A
    cell that crashes contributes an error row instead of killing the
    sweep.
    """
    base = load_config(config)
    names = [b["name"] for b in base["banks"]]
    for path in sweep:
        validate_param_path(path, names)
    paths = list(sweep)
    rows = []
    for index, combo in enumerate(itertools.product(*(sweep[p] for p in paths))):
        cfg = copy.deepcopy(base)
        cfg["seed"] = derive_subseed(base["seed"], index)
        schedule = cfg.setdefault("event_schedule", [])
        for path, value in zip(paths, combo):
            schedule.append({"step": 1, "path": path, "value": value})
        row = {"cell": index, "seed": cfg["seed"]}
        row.update(zip(paths, combo))
        try:
            world = World(cfg)
            world.run(steps)
            last = world.series[-1]
            row.update(
                steps=world.step,
                system_narrow=last["system_narrow"],
                system_broad=last["system_broad"],
                system_loans=last["system_loans"],
                defaults=sum(1 for e in world.events if e["kind"] == "default"),
                denials=sum(1 for e in world.events if e["kind"] == "denial"),
                insolvencies=len(world._insolvency_flagged),
                error="",
            )
        except Exception as e:  # noqa: BLE001 - cell isolation is the point
            row.update(steps=0, error=f"{type(e).__name__}: {e}")
        rows.append(row)
    return rows
