import sqlite3
import pandas as pd
import json
from datetime import datetime
import uuid

import config
from utils.logger import get_logger

logger = get_logger(__name__)

RUN_COLUMNS = ['id', 'command', 'source', 'version', 'verdict', 'exit_code', 'created_at']


def get_connection(db_file=None):
    """Creates a connection to the run registry (RUNS_DB_FILE unless db_file is given)."""
    return sqlite3.connect(db_file or config.RUNS_DB_FILE)


def init_db(db_file=None):
    """Initializes the runs table if it does not exist."""
    conn = get_connection(db_file)
    c = conn.cursor()
    c.execute('''CREATE TABLE IF NOT EXISTS runs
                 (id TEXT PRIMARY KEY,
                  command TEXT,
                  source TEXT,
                  version INTEGER,
                  verdict TEXT,
                  exit_code INTEGER,
                  json_data TEXT,
                  created_at TIMESTAMP)''')
    conn.commit()
    conn.close()


# --- Run CRUD Operations ---

def save_run(command, source, verdict, exit_code, report, db_file=None):
    """Stores one CLI run; repeated (command, source) pairs get increasing versions."""
    init_db(db_file)
    conn = get_connection(db_file)
    c = conn.cursor()
    try:
        json_str = json.dumps(report)

        # Get next version number
        c.execute("SELECT MAX(version) FROM runs WHERE command=? AND source=?", (command, source))
        max_version = c.fetchone()[0]
        next_version = (max_version + 1) if max_version else 1

        run_id = str(uuid.uuid4())
        c.execute('''INSERT INTO runs (id, command, source, version, verdict, exit_code, json_data, created_at)
                     VALUES (?, ?, ?, ?, ?, ?, ?, ?)''',
                  (run_id, command, source, next_version, verdict, int(exit_code), json_str,
                   datetime.now().isoformat(timespec="seconds")))
        conn.commit()
        return True, run_id
    except sqlite3.Error as e:
        logger.error("Could not record run: %s", e)
        return False, str(e)
    finally:
        conn.close()


def get_runs_list(command=None, db_file=None):
    """Recorded runs, newest first, optionally filtered by command."""
    init_db(db_file)
    conn = get_connection(db_file)
    try:
        query = "SELECT id, command, source, version, verdict, exit_code, created_at FROM runs"
        params = ()
        if command:
            query += " WHERE command=?"
            params = (command,)
        df = pd.read_sql_query(query + " ORDER BY created_at DESC, version DESC", conn, params=params)
    except (sqlite3.Error, pd.errors.DatabaseError) as e:
        logger.error("Could not list runs: %s", e)
        df = pd.DataFrame(columns=RUN_COLUMNS)
    finally:
        conn.close()
    return df


def get_run_history(command, source, db_file=None):
    """All versions of one (command, source) pair."""
    init_db(db_file)
    conn = get_connection(db_file)
    try:
        df = pd.read_sql_query(
            "SELECT id, version, verdict, exit_code, created_at FROM runs "
            "WHERE command=? AND source=? ORDER BY version DESC",
            conn,
            params=(command, source)
        )
    except (sqlite3.Error, pd.errors.DatabaseError) as e:
        logger.error("Could not read run history: %s", e)
        df = pd.DataFrame(columns=["id", "version", "verdict", "exit_code", "created_at"])
    finally:
        conn.close()
    return df


def get_run_report(run_id, db_file=None):
    """Retrieves the stored report of one run, or None."""
    init_db(db_file)
    conn = get_connection(db_file)
    c = conn.cursor()
    try:
        c.execute("SELECT json_data FROM runs WHERE id=?", (run_id,))
        row = c.fetchone()
        if row:
            return json.loads(row[0])
        return None
    finally:
        conn.close()
